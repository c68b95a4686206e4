#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "shiftlens/cli.hpp"

int main(int argc, char** argv) {
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        return shiftlens::run_cli(args, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (...) {
        std::cerr << "error: unexpected failure\n";
        return 2;
    }
}
