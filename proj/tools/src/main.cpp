#include <string>
#include <vector>

#include "radreg_cli/commands.hpp"

int main(int argc, char **argv) {
    return radreg::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
