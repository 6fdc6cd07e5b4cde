#include <string>
#include <vector>

#include "choicepred/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return choicepred::run_cli(std::move(args));
}
