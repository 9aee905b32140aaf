#include <string>
#include <vector>

#include "lplr/cli.hpp"

int main(int argc, char** argv)
{
    return lplr::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
