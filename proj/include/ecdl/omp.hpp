#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ecdl/dictionary.hpp"
#include "ecdl/matrix.hpp"

namespace ecdl {

/// Sparse coefficient vector over a dictionary of `dim` atoms. Support is
/// kept in selection order; coefficients are aligned with it.
struct SparseCode {
    std::vector<std::uint32_t> support;
    std::vector<double> coefficients;
    std::size_t dim = 0;

    std::size_t nnz() const noexcept { return support.size(); }
    bool empty() const noexcept { return support.empty(); }
    Vector dense() const;

    friend bool operator==(const SparseCode&, const SparseCode&) = default;
};

struct SparseCodeSet {
    std::vector<SparseCode> codes;
    std::size_t k_budget = 0;
    std::size_t dim = 0;

    std::size_t size() const noexcept { return codes.size(); }
    /// K x M, zeros off-support.
    Matrix dense() const;
    static SparseCodeSet from_dense(const Matrix& x, std::size_t k_budget);

    friend bool operator==(const SparseCodeSet&, const SparseCodeSet&) = default;
};

inline constexpr double kDefaultOmpTol = 1e-9;

/// Greedy OMP: while |S| < k and ||r|| > tol * ||y||, add the atom with the
/// largest |d_j^T r| (lowest index on ties) and refit y on the selected atoms.
SparseCode omp_encode(const Dictionary& d, const Eigen::Ref<const Vector>& y, std::size_t k, double tol = kDefaultOmpTol);

/// Same loop with an absolute residual threshold: stops once ||r|| <= stop_norm.
/// Used to continue coding a residual against the scale of the original sample.
SparseCode omp_encode_to_norm(const Dictionary& d, const Eigen::Ref<const Vector>& y, std::size_t k, double stop_norm);

/// Per-column omp_encode. With threads > 1 columns are split across workers;
/// the output is identical to the serial result.
SparseCodeSet omp_encode_batch(const Dictionary& d, const Matrix& y, std::size_t k, double tol = kDefaultOmpTol,
                               unsigned threads = 1);

/// Codes each column of `residuals` with stop threshold tol * ||reference column||.
SparseCodeSet omp_encode_residual_batch(const Dictionary& d, const Matrix& residuals, const Matrix& reference,
                                        std::size_t k, double tol, unsigned threads = 1);

Vector reconstruct(const Dictionary& d, const SparseCode& code);

/// D X for a whole set, column by column.
Matrix reconstruct(const Dictionary& d, const SparseCodeSet& codes);

/// Coefficient-wise sum over the union of supports. Coefficients that cancel
/// to exactly zero are dropped. No refit is performed.
SparseCode code_sum(const SparseCode& a, const SparseCode& b);

SparseCodeSet code_sum(const SparseCodeSet& a, const SparseCodeSet& b, std::size_t k_budget);

struct SupportStats {
    std::vector<std::size_t> histogram;  // index = support size, 0..k_budget; empty for an empty set
    std::optional<double> mean;
};

SupportStats support_stats(const SparseCodeSet& codes);

}  // namespace ecdl
