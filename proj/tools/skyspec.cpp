#include "skyspec/cli.hpp"

int main(int argc, char** argv)
{
    return skyspec::cli::cli_dispatch(argc, argv);
}
