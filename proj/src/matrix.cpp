#include "ecdl/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "ecdl/error.hpp"

namespace ecdl {

namespace {

std::string shape(const Matrix& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double svd_threshold(Eigen::Index rows, Eigen::Index cols, double sigma_max)
{
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma_max;
}

Vector inverted_singular_values(const Vector& sigma, double tau)
{
    Vector inv = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma[i] > tau) inv[i] = 1.0 / sigma[i];
    }
    return inv;
}

template <typename Svd>
void check_svd(const Svd& svd, const Matrix& a, const char* what)
{
    if (svd.info() != Eigen::Success) {
        fail(ErrorCode::numeric, std::string(what) + ": SVD did not converge for " + shape(a) + " matrix");
    }
}

}  // namespace

double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    require(bound > 0, ErrorCode::invalid_argument, "Rng::below: bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
}

bool all_finite(const Matrix& a)
{
    return a.allFinite();
}

Matrix pseudo_inverse(const Matrix& a)
{
    require(a.size() > 0, ErrorCode::invalid_argument, "pseudo_inverse: empty matrix");
    require(all_finite(a), ErrorCode::invalid_argument, "pseudo_inverse: non-finite entry in " + shape(a) + " matrix");

    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    check_svd(svd, a, "pseudo_inverse");
    const Vector& sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
    const Vector inv = inverted_singular_values(sigma, svd_threshold(a.rows(), a.cols(), sigma_max));

    Matrix result = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    require(all_finite(result), ErrorCode::numeric, "pseudo_inverse: non-finite result for " + shape(a) + " matrix");
    return result;
}

LeastSquaresResult least_squares_dictionary(const Matrix& samples, const Matrix& codes)
{
    require(samples.cols() >= 1 && samples.rows() >= 1 && codes.rows() >= 1, ErrorCode::invalid_argument,
            "least_squares_dictionary: empty input");
    require(samples.cols() == codes.cols(), ErrorCode::dimension_mismatch,
            "least_squares_dictionary: samples " + shape(samples) + " vs codes " + shape(codes));
    require(all_finite(samples) && all_finite(codes), ErrorCode::invalid_argument,
            "least_squares_dictionary: non-finite input");

    const Eigen::Index n = samples.rows();
    const Eigen::Index num_atoms = codes.rows();
    const Eigen::Index num_samples = codes.cols();

    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < num_atoms; ++j) {
        if ((codes.row(j).array() != 0.0).any()) active.push_back(j);
    }

    LeastSquaresResult out;
    out.dictionary = Matrix::Zero(n, num_atoms);
    if (active.empty()) {
        out.degenerate = true;
        return out;
    }

    const auto used = static_cast<Eigen::Index>(active.size());
    Matrix x(used, num_samples);
    for (Eigen::Index a = 0; a < used; ++a) x.row(a) = codes.row(active[a]);

    // The threshold follows the shape of the full code matrix.
    Matrix solved;
    if (num_samples >= used) {
        // X^T = Q R, R = U S V^T  =>  X = V S (Q U)^T  and  Y X^+ = (Y Q) U S^+ V^T.
        Eigen::HouseholderQR<Matrix> qr(x.transpose());
        const Matrix r = qr.matrixQR().topRows(used).triangularView<Eigen::Upper>();
        Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
        check_svd(svd, codes, "least_squares_dictionary");
        const Vector& sigma = svd.singularValues();
        const Vector inv = inverted_singular_values(sigma, svd_threshold(num_atoms, num_samples, sigma[0]));

        Matrix projected = samples.transpose();
        projected.applyOnTheLeft(qr.householderQ().adjoint());
        const Matrix yq = projected.topRows(used).transpose();
        solved = yq * svd.matrixU() * inv.asDiagonal() * svd.matrixV().transpose();
    } else {
        Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
        check_svd(svd, codes, "least_squares_dictionary");
        const Vector& sigma = svd.singularValues();
        const Vector inv = inverted_singular_values(sigma, svd_threshold(num_atoms, num_samples, sigma[0]));
        solved = (samples * svd.matrixV()) * inv.asDiagonal() * svd.matrixU().transpose();
    }

    for (Eigen::Index a = 0; a < used; ++a) out.dictionary.col(active[a]) = solved.col(a);
    require(all_finite(out.dictionary), ErrorCode::numeric, "least_squares_dictionary: non-finite update");
    return out;
}

Matrix seeded_uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng)
{
    require(rows >= 1 && cols >= 1, ErrorCode::invalid_argument,
            "seeded_uniform_matrix: dimensions must be positive, got " + std::to_string(rows) + "x" + std::to_string(cols));
    require(lo < hi, ErrorCode::invalid_argument, "seeded_uniform_matrix: lo must be below hi");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

double frobenius_mse(const Matrix& a, const Matrix& b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::dimension_mismatch,
            "frobenius_mse: shape " + shape(a) + " vs " + shape(b));
    require(a.size() > 0, ErrorCode::invalid_argument, "frobenius_mse: empty matrices");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double d = a(i, j) - b(i, j);
            sum += d * d;
        }
    }
    return sum / static_cast<double>(a.size());
}

std::string encode_mat1(const Matrix& m)
{
    require(m.rows() >= 1 && m.cols() >= 1, ErrorCode::invalid_argument, "MAT1: empty matrix");
    std::string out = "MAT1 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    const std::size_t header = out.size();
    out.resize(header + static_cast<std::size_t>(m.size()) * sizeof(double));
    char* dst = out.data() + header;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            auto bits = std::bit_cast<std::uint64_t>(m(i, j));
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            std::memcpy(dst, &bits, sizeof bits);
            dst += sizeof bits;
        }
    }
    return out;
}

Matrix decode_mat1(std::string_view bytes)
{
    const auto newline = bytes.find('\n');
    require(newline != std::string_view::npos && newline < 64, ErrorCode::malformed_header, "MAT1: missing header line");
    std::istringstream header{std::string(bytes.substr(0, newline))};
    std::string magic;
    long long rows = 0;
    long long cols = 0;
    header >> magic >> rows >> cols;
    require(magic == "MAT1", ErrorCode::unsupported_format, "MAT1: bad magic '" + magic + "'");
    require(static_cast<bool>(header) && rows >= 1 && cols >= 1, ErrorCode::malformed_header, "MAT1: bad dimensions");
    std::string rest;
    require(!(header >> rest), ErrorCode::malformed_header, "MAT1: trailing header tokens");

    const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::string_view payload = bytes.substr(newline + 1);
    require(payload.size() >= count * sizeof(double), ErrorCode::truncated_data,
            "MAT1: expected " + std::to_string(count * sizeof(double)) + " payload bytes, got " + std::to_string(payload.size()));
    require(payload.size() == count * sizeof(double), ErrorCode::malformed_header, "MAT1: trailing bytes after payload");

    Matrix m(rows, cols);
    const char* src = payload.data();
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, src, sizeof bits);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            m(i, j) = std::bit_cast<double>(bits);
            src += sizeof bits;
        }
    }
    require(all_finite(m), ErrorCode::invalid_argument, "MAT1: non-finite entry");
    return m;
}

void write_mat1(const Matrix& m, const std::filesystem::path& path)
{
    const std::string bytes = encode_mat1(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::io, "write failed: " + path.string());
}

Matrix read_mat1(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return decode_mat1(buffer.str());
}

}  // namespace ecdl
