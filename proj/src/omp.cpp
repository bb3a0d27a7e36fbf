#include "ecdl/omp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "ecdl/error.hpp"

namespace ecdl {

namespace {

std::string support_string(const std::vector<std::uint32_t>& support)
{
    std::string s = "[";
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(support[i]);
    }
    return s + "]";
}

SparseCode pursue(const Dictionary& d, const Vector& y, std::size_t k, double stop_norm)
{
    const Matrix& atoms = d.atoms();
    require(y.size() == atoms.rows(), ErrorCode::dimension_mismatch,
            "omp: sample dimension " + std::to_string(y.size()) + " does not match dictionary dimension " +
                std::to_string(atoms.rows()));
    require(y.allFinite(), ErrorCode::invalid_argument, "omp: non-finite sample");

    SparseCode code;
    code.dim = static_cast<std::size_t>(atoms.cols());
    const std::size_t budget = std::min<std::size_t>(k, static_cast<std::size_t>(atoms.cols()));

    Vector residual = y;
    double rnorm = residual.norm();
    Matrix selected(atoms.rows(), 0);
    Vector coeffs;
    std::vector<char> taken(static_cast<std::size_t>(atoms.cols()), 0);

    while (code.support.size() < budget && rnorm > stop_norm) {
        const Vector corr = atoms.transpose() * residual;
        Eigen::Index best = -1;
        double best_abs = 0.0;
        for (Eigen::Index j = 0; j < corr.size(); ++j) {
            const double a = std::abs(corr[j]);
            if (!taken[static_cast<std::size_t>(j)] && a > best_abs) {
                best_abs = a;
                best = j;
            }
        }
        if (best < 0) break;  // residual orthogonal to every remaining atom

        taken[static_cast<std::size_t>(best)] = 1;
        code.support.push_back(static_cast<std::uint32_t>(best));
        selected.conservativeResize(Eigen::NoChange, selected.cols() + 1);
        selected.col(selected.cols() - 1) = atoms.col(best);

        Eigen::HouseholderQR<Matrix> qr(selected);
        const auto diag = qr.matrixQR().diagonal().cwiseAbs();
        const double scale = std::max(1.0, diag.maxCoeff());
        const double floor = static_cast<double>(atoms.rows()) * std::numeric_limits<double>::epsilon() * scale;
        if (diag.minCoeff() <= floor) {
            fail(ErrorCode::numeric, "omp: selected atoms " + support_string(code.support) + " are numerically singular");
        }
        coeffs = qr.solve(y);
        residual = y - selected * coeffs;
        rnorm = residual.norm();
    }

    code.coefficients.assign(coeffs.data(), coeffs.data() + coeffs.size());
    return code;
}

template <typename Encode>
SparseCodeSet batch(const Dictionary& d, Eigen::Index columns, std::size_t k, unsigned threads, Encode encode)
{
    SparseCodeSet out;
    out.k_budget = k;
    out.dim = static_cast<std::size_t>(d.size());
    out.codes.resize(static_cast<std::size_t>(columns));

    auto run_range = [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
            try {
                out.codes[static_cast<std::size_t>(i)] = encode(i);
            } catch (const Error& e) {
                throw Error(e.code(), std::string(e.what()) + " (sample " + std::to_string(i) + ")");
            }
        }
    };

    const auto workers = static_cast<Eigen::Index>(std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Eigen::Index>(columns, 1)))));
    if (workers == 1) {
        run_range(0, columns);
        return out;
    }

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (columns + workers - 1) / workers;
    for (Eigen::Index w = 0; w < workers; ++w) {
        const Eigen::Index begin = std::min(columns, w * chunk);
        const Eigen::Index end = std::min(columns, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                run_range(begin, end);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace

Vector SparseCode::dense() const
{
    Vector x = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = coefficients[i];
    return x;
}

Matrix SparseCodeSet::dense() const
{
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(codes.size()));
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& c = codes[i];
        for (std::size_t s = 0; s < c.support.size(); ++s) x(c.support[s], static_cast<Eigen::Index>(i)) = c.coefficients[s];
    }
    return x;
}

SparseCodeSet SparseCodeSet::from_dense(const Matrix& x, std::size_t k_budget)
{
    SparseCodeSet out;
    out.k_budget = k_budget;
    out.dim = static_cast<std::size_t>(x.rows());
    out.codes.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        auto& c = out.codes[static_cast<std::size_t>(i)];
        c.dim = out.dim;
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
            if (x(j, i) != 0.0) {
                c.support.push_back(static_cast<std::uint32_t>(j));
                c.coefficients.push_back(x(j, i));
            }
        }
        require(c.support.size() <= k_budget, ErrorCode::invalid_argument,
                "code column " + std::to_string(i) + " has more than " + std::to_string(k_budget) + " nonzeros");
    }
    return out;
}

SparseCode omp_encode(const Dictionary& d, const Eigen::Ref<const Vector>& y, std::size_t k, double tol)
{
    require(tol >= 0.0, ErrorCode::invalid_argument, "omp: tolerance must be non-negative");
    const Vector sample = y;
    return pursue(d, sample, k, tol * sample.norm());
}

SparseCode omp_encode_to_norm(const Dictionary& d, const Eigen::Ref<const Vector>& y, std::size_t k, double stop_norm)
{
    require(stop_norm >= 0.0, ErrorCode::invalid_argument, "omp: stop norm must be non-negative");
    const Vector sample = y;
    return pursue(d, sample, k, stop_norm);
}

SparseCodeSet omp_encode_batch(const Dictionary& d, const Matrix& y, std::size_t k, double tol, unsigned threads)
{
    return batch(d, y.cols(), k, threads, [&](Eigen::Index i) { return omp_encode(d, y.col(i), k, tol); });
}

SparseCodeSet omp_encode_residual_batch(const Dictionary& d, const Matrix& residuals, const Matrix& reference,
                                        std::size_t k, double tol, unsigned threads)
{
    require(residuals.rows() == reference.rows() && residuals.cols() == reference.cols(), ErrorCode::dimension_mismatch,
            "omp: residual and reference matrices differ in shape");
    require(tol >= 0.0, ErrorCode::invalid_argument, "omp: tolerance must be non-negative");
    return batch(d, residuals.cols(), k, threads, [&](Eigen::Index i) {
        return omp_encode_to_norm(d, residuals.col(i), k, tol * reference.col(i).norm());
    });
}

Vector reconstruct(const Dictionary& d, const SparseCode& code)
{
    require(code.dim == static_cast<std::size_t>(d.size()), ErrorCode::dimension_mismatch, "reconstruct: code dimension differs from dictionary size");
    Vector out = Vector::Zero(d.dim());
    for (std::size_t s = 0; s < code.support.size(); ++s) out += code.coefficients[s] * d.atoms().col(code.support[s]);
    return out;
}

Matrix reconstruct(const Dictionary& d, const SparseCodeSet& codes)
{
    Matrix out(d.dim(), static_cast<Eigen::Index>(codes.size()));
    for (std::size_t i = 0; i < codes.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = reconstruct(d, codes.codes[i]);
    return out;
}

SparseCode code_sum(const SparseCode& a, const SparseCode& b)
{
    require(a.dim == b.dim, ErrorCode::dimension_mismatch,
            "code_sum: dimensions " + std::to_string(a.dim) + " and " + std::to_string(b.dim));
    SparseCode out = a;
    for (std::size_t s = 0; s < b.support.size(); ++s) {
        const auto it = std::find(out.support.begin(), out.support.end(), b.support[s]);
        if (it == out.support.end()) {
            out.support.push_back(b.support[s]);
            out.coefficients.push_back(b.coefficients[s]);
        } else {
            out.coefficients[static_cast<std::size_t>(it - out.support.begin())] += b.coefficients[s];
        }
    }
    std::size_t w = 0;
    for (std::size_t r = 0; r < out.support.size(); ++r) {
        if (out.coefficients[r] == 0.0) continue;
        out.support[w] = out.support[r];
        out.coefficients[w] = out.coefficients[r];
        ++w;
    }
    out.support.resize(w);
    out.coefficients.resize(w);
    return out;
}

SparseCodeSet code_sum(const SparseCodeSet& a, const SparseCodeSet& b, std::size_t k_budget)
{
    require(a.size() == b.size(), ErrorCode::dimension_mismatch, "code_sum: code sets differ in length");
    SparseCodeSet out;
    out.k_budget = k_budget;
    out.dim = a.dim;
    out.codes.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.codes.push_back(code_sum(a.codes[i], b.codes[i]));
        require(out.codes.back().nnz() <= k_budget, ErrorCode::invalid_argument, "code_sum: result exceeds budget");
    }
    return out;
}

SupportStats support_stats(const SparseCodeSet& codes)
{
    SupportStats stats;
    if (codes.codes.empty()) return stats;
    stats.histogram.assign(codes.k_budget + 1, 0);
    std::size_t total = 0;
    for (const auto& c : codes.codes) {
        const std::size_t size = c.nnz();
        if (size >= stats.histogram.size()) stats.histogram.resize(size + 1, 0);
        ++stats.histogram[size];
        total += size;
    }
    stats.mean = static_cast<double>(total) / static_cast<double>(codes.codes.size());
    return stats;
}

}  // namespace ecdl
