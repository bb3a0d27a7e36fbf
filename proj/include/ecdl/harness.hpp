#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecdl/dictionary.hpp"
#include "ecdl/learners.hpp"
#include "ecdl/patches.hpp"

namespace ecdl {

struct ExperimentSpec {
    std::filesystem::path image;
    std::size_t patch_side = 8;
    std::size_t stride = 8;
    std::size_t atoms = 256;
    std::vector<Algorithm> algorithms{Algorithm::mod};
    LearnConfig learn;  // learn.algo is overridden per entry of `algorithms`
    std::vector<std::size_t> test_k{2, 5, 10, 20};
    std::vector<std::uint64_t> seeds;  // required for random init; ignored for dct
    std::filesystem::path out_dir;
    bool timings = false;

    void validate() const;
};

struct SeedOutcome {
    Algorithm algorithm;
    std::string label;  // seed number, or "dct"
    double final_psnr_db;
};

struct ExperimentReport {
    std::vector<SeedOutcome> runs;
    std::vector<std::filesystem::path> files;
};

/// For each algorithm and seed: build D0, train, evaluate on the training
/// patches, and write trace_/dict_/eval_ files; then summary.csv with the
/// per-iteration min/mean/max PSNR across runs of each algorithm.
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// Training matrix variant for callers that already hold patches.
ExperimentReport run_experiment(const ExperimentSpec& spec, const Matrix& samples);

/// Tiles atoms (each min-max scaled to 0..255, constant atoms at 128) into a
/// ceil(sqrt(K))-wide grid with 1-pixel black separators.
GrayImage dictionary_mosaic(const Matrix& atoms);
void export_dictionary_mosaic(const Dictionary& d, const std::filesystem::path& path);

}  // namespace ecdl
