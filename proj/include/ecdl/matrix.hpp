#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ecdl {

// Column-major storage; atoms and patches are columns. MAT1 files are
// row-major on disk and converted on read/write.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Seedable, platform-stable random stream. mt19937_64 output is fixed by the
// standard; the real-valued draws are derived here rather than through
// <random> distributions, whose output is implementation-defined.
class Rng {
public:
    static constexpr std::string_view algorithm = "mt19937_64/53bit";

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one draw per call, the pair's sine half is discarded).
    double normal();

    /// Uniform integer on [0, bound). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

bool all_finite(const Matrix& a);

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
/// max(rows, cols) * eps * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& a);

struct LeastSquaresResult {
    Matrix dictionary;
    /// Set when the code matrix is identically zero; the dictionary is then all zeros.
    bool degenerate = false;
};

/// D = Y X^+, the minimiser of ||Y - D X||_F. Rows of X that are identically
/// zero produce exactly-zero dictionary columns.
LeastSquaresResult least_squares_dictionary(const Matrix& samples, const Matrix& codes);

/// Entries i.i.d. uniform on [lo, hi), drawn in row-major order.
Matrix seeded_uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng);

/// ||A - B||_F^2 / (rows * cols), summed in a fixed row-major order.
double frobenius_mse(const Matrix& a, const Matrix& b);

// MAT1: "MAT1 <rows> <cols>\n" followed by rows*cols little-endian doubles, row-major.
void write_mat1(const Matrix& m, const std::filesystem::path& path);
Matrix read_mat1(const std::filesystem::path& path);
std::string encode_mat1(const Matrix& m);
Matrix decode_mat1(std::string_view bytes);

}  // namespace ecdl
