#include <string>
#include <vector>

#include "dgwc/experiment.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dgwc::run_cli(args);
}
