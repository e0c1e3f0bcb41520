#include <string>
#include <vector>

#include "tvcsl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tvcsl::cli_main(args);
}
