#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecdl/ecdl.h"

namespace ecdl::cli {

class UsageError : public std::runtime_error {
public:
    UsageError(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

struct Command {
    std::string name;  // learn | extract | encode | evaluate | mosaic

    std::string image;
    std::string dict;
    std::string input;
    std::string out;
    std::size_t patch_size = 8;
    std::size_t stride = 8;
    std::size_t atoms = 256;
    std::vector<ecdl_algorithm> algos;
    ecdl_learn_config learn{};
    std::vector<std::size_t> test_k{2, 5, 10, 20};
    std::vector<std::uint64_t> seeds;
    bool timings = false;
    bool dct = false;

    /// Borrowing view for ecdl_run_experiment; valid while this Command lives.
    ecdl_experiment_spec experiment() const;
};

/// Parses and validates argv. Throws UsageError; exit_code 0 means help was requested.
Command parse_args(int argc, const char* const* argv);

/// Executes a parsed command through the C API. Returns the process exit status.
int run(const Command& command, std::ostream& out, std::ostream& err);

}  // namespace ecdl::cli
