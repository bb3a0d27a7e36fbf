#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ecdl/matrix.hpp"

namespace ecdl {

enum class InitMode { dct, random, loaded };

/// Overcomplete set of unit-norm atoms stored as the columns of an n x K
/// matrix. Immutable once built; every factory normalizes and validates.
class Dictionary {
public:
    /// Normalizes the columns of `atoms`. Zero columns are rejected.
    static Dictionary from_matrix(const Matrix& atoms, InitMode mode = InitMode::loaded,
                                  std::optional<std::uint64_t> seed = std::nullopt);

    const Matrix& atoms() const noexcept { return atoms_; }
    Eigen::Index dim() const noexcept { return atoms_.rows(); }
    Eigen::Index size() const noexcept { return atoms_.cols(); }
    InitMode init_mode() const noexcept { return mode_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

private:
    Dictionary(Matrix atoms, InitMode mode, std::optional<std::uint64_t> seed)
        : atoms_(std::move(atoms)), mode_(mode), seed_(seed) {}

    Matrix atoms_;
    InitMode mode_;
    std::optional<std::uint64_t> seed_;
};

/// Separable overcomplete DCT: cos(i p pi / q) columns (mean removed for p > 0),
/// combined by a Kronecker product into (side^2) x q^2 atoms.
Dictionary overcomplete_dct(std::size_t patch_side, std::size_t num_atoms);

/// Uniform [0, 1) entries, column-normalized.
Dictionary random_dictionary(std::size_t n, std::size_t num_atoms, Rng& rng);

struct NormalizedColumns {
    Matrix atoms;
    std::vector<double> scales;             // original column norms; 0 for flagged columns
    std::vector<std::size_t> zero_columns;  // left untouched
};

/// A column counts as zero when its norm is at most this fraction of the largest column norm.
inline constexpr double kZeroColumnRelTol = 1e-12;

NormalizedColumns normalize_columns(const Matrix& d);

/// Absolute inner product above which two unit atoms are treated as duplicates.
inline constexpr double kDuplicateThreshold = 1.0 - 1e-6;

enum class RepairOverflow {
    error,   // more degenerate atoms than usable samples is an error
    random,  // remaining atoms get seeded random unit vectors
};

struct RepairResult {
    Dictionary dictionary;
    std::vector<std::size_t> replaced;  // atom indices, ascending
};

/// Replaces zero-norm atoms and the later member of every duplicate pair by
/// the normalized training sample with the largest residual, each sample used
/// at most once per call. Samples that would duplicate a remaining atom are skipped.
RepairResult replace_degenerate_atoms(const Matrix& atoms, const Matrix& samples, std::span<const double> residuals,
                                      Rng& rng, RepairOverflow overflow = RepairOverflow::error);

/// Indices of zero-norm columns and of the later member of each duplicate pair.
std::vector<std::size_t> degenerate_atoms(const Matrix& atoms);

/// max_{i != j} |d_i^T d_j|.
double coherence(const Dictionary& d);

}  // namespace ecdl
