#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv)
{
    try {
        const auto command = ecdl::cli::parse_args(argc, argv);
        return ecdl::cli::run(command, std::cout, std::cerr);
    } catch (const ecdl::cli::UsageError& e) {
        (e.exit_code() == 0 ? std::cout : std::cerr) << e.what() << "\n";
        return e.exit_code();
    }
}
