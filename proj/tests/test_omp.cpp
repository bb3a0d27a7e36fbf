#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "ecdl/error.hpp"
#include "ecdl/omp.hpp"
#include "test_util.hpp"

using namespace ecdl;

namespace {

struct RefCode {
    std::vector<std::uint32_t> support;
    std::vector<double> coefficients;
};

// Straight-line greedy OMP: scalar loops for correlation, normal equations for the refit.
RefCode reference_omp(const Matrix& d, const Vector& y, std::size_t k, double tol)
{
    RefCode out;
    Vector r = y;
    const double stop = tol * y.norm();
    while (out.support.size() < k && r.norm() > stop) {
        double best = -1.0;
        std::uint32_t best_j = 0;
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (std::find(out.support.begin(), out.support.end(), j) != out.support.end()) continue;
            double c = 0.0;
            for (Eigen::Index i = 0; i < d.rows(); ++i) c += d(i, j) * r(i);
            if (std::abs(c) > best) {
                best = std::abs(c);
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        out.support.push_back(best_j);
        const auto s = static_cast<Eigen::Index>(out.support.size());
        Matrix ds(d.rows(), s);
        for (Eigen::Index t = 0; t < s; ++t) ds.col(t) = d.col(out.support[static_cast<std::size_t>(t)]);
        const Vector c = (ds.transpose() * ds).ldlt().solve(ds.transpose() * y);
        out.coefficients.assign(c.data(), c.data() + s);
        r = y - ds * c;
    }
    return out;
}

Vector residual(const Dictionary& d, const Vector& y, const SparseCode& c)
{
    return y - reconstruct(d, c);
}

}  // namespace

TEST_CASE("omp recovers an exact atom")
{
    Rng rng(1);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const Vector y = d.atoms().col(5);
    const SparseCode c = omp_encode(d, y, 1);
    REQUIRE(c.support == std::vector<std::uint32_t>{5});
    CHECK(c.coefficients[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(residual(d, y, c).norm() < 1e-14);
    CHECK(c.dim == 16);
}

TEST_CASE("omp of the zero signal or zero budget is empty")
{
    Rng rng(2);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    CHECK(omp_encode(d, Vector::Zero(8), 3).empty());
    CHECK(omp_encode(d, Vector::Ones(8), 0).empty());
}

TEST_CASE("omp matches the reference implementation on a seeded 4x8 instance")
{
    Rng rng(3);
    const Dictionary d = test::gaussian_dictionary(4, 8, rng);
    const Vector y = test::gaussian(4, 1, rng);
    const SparseCode c = omp_encode(d, y, 2);
    const RefCode ref = reference_omp(d.atoms(), y, 2, kDefaultOmpTol);
    CHECK(c.support == ref.support);
    REQUIRE(c.coefficients.size() == ref.coefficients.size());
    for (std::size_t i = 0; i < ref.coefficients.size(); ++i) {
        CHECK(std::abs(c.coefficients[i] - ref.coefficients[i]) < 1e-12);
    }
}

TEST_CASE("omp matches the reference implementation on random instances")
{
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(15));
        const auto kk = static_cast<Eigen::Index>(n + rng.below(static_cast<std::uint64_t>(33 - n)));
        const Dictionary d = test::gaussian_dictionary(n, kk, rng);
        const Vector y = test::gaussian(n, 1, rng);
        const std::size_t k = 1 + rng.below(std::min<std::uint64_t>(4, static_cast<std::uint64_t>(n)));
        const SparseCode c = omp_encode(d, y, k);
        const RefCode ref = reference_omp(d.atoms(), y, k, kDefaultOmpTol);
        CHECK(c.support == ref.support);
        for (std::size_t i = 0; i < std::min(c.coefficients.size(), ref.coefficients.size()); ++i) {
            CHECK(std::abs(c.coefficients[i] - ref.coefficients[i]) < 1e-9);
        }
    }
}

TEST_CASE("omp ties go to the lowest index")
{
    Matrix m(2, 3);
    m << 1, 0, 1, 0, 1, 0;  // atoms 0 and 2 are identical
    const Dictionary d = Dictionary::from_matrix(m);
    Vector y(2);
    y << 1, 1;  // equal correlation with all three atoms
    const SparseCode c = omp_encode(d, y, 1);
    CHECK(c.support == std::vector<std::uint32_t>{0});
}

TEST_CASE("omp invariants: orthogonality, uniqueness, monotone residual, budget")
{
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Dictionary d = test::gaussian_dictionary(16, 32, rng);
        const Vector y = test::gaussian(16, 1, rng);
        double prev = y.norm();
        for (std::size_t k = 1; k <= 6; ++k) {
            const SparseCode c = omp_encode(d, y, k);
            CHECK(c.nnz() <= k);
            std::set<std::uint32_t> uniq(c.support.begin(), c.support.end());
            CHECK(uniq.size() == c.nnz());
            const Vector r = residual(d, y, c);
            for (const auto j : c.support) CHECK(std::abs(d.atoms().col(j).dot(r)) <= 1e-8 * y.norm());
            CHECK(r.norm() <= prev + 1e-12);
            prev = r.norm();
            // Prefix property: the k-run extends the (k-1)-run.
            if (k > 1) {
                const SparseCode shorter = omp_encode(d, y, k - 1);
                CHECK(std::equal(shorter.support.begin(), shorter.support.end(), c.support.begin()));
            }
        }
    }
}

TEST_CASE("omp stops early once the relative tolerance is met")
{
    Rng rng(6);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const Vector y = 2.0 * d.atoms().col(1) - 3.0 * d.atoms().col(9);
    const SparseCode c = omp_encode(d, y, 5);
    CHECK(c.nnz() == 2);
    CHECK(std::set<std::uint32_t>(c.support.begin(), c.support.end()) == std::set<std::uint32_t>{1, 9});
}

TEST_CASE("omp_encode_to_norm uses an absolute threshold")
{
    Rng rng(7);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const Vector y = test::gaussian(8, 1, rng);
    CHECK(omp_encode_to_norm(d, y, 4, y.norm()).empty());
    const SparseCode full = omp_encode_to_norm(d, y, 4, 0.0);
    CHECK(full == omp_encode(d, y, 4, 0.0));
}

TEST_CASE("omp rejects invalid arguments")
{
    Rng rng(8);
    const Dictionary d = test::gaussian_dictionary(4, 8, rng);
    CHECK_THROWS_AS(omp_encode(d, Vector::Ones(5), 1), Error);
    CHECK_THROWS_AS(omp_encode(d, Vector::Ones(4), 1, -1.0), Error);
}

TEST_CASE("omp_encode_batch: singleton equals single coding")
{
    Rng rng(9);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const Matrix y = test::gaussian(8, 1, rng);
    const SparseCodeSet set = omp_encode_batch(d, y, 3);
    REQUIRE(set.size() == 1);
    CHECK(set.codes[0] == omp_encode(d, y.col(0), 3));
    CHECK(set.k_budget == 3);
    CHECK(set.dim == 16);
}

TEST_CASE("omp_encode_batch: threaded output is bit-identical")
{
    Rng rng(10);
    const Dictionary d = test::gaussian_dictionary(16, 32, rng);
    const Matrix y = test::gaussian(16, 64, rng);
    const SparseCodeSet serial = omp_encode_batch(d, y, 4, kDefaultOmpTol, 1);
    for (unsigned t : {2u, 3u, 8u, 100u}) CHECK(omp_encode_batch(d, y, 4, kDefaultOmpTol, t) == serial);
}

TEST_CASE("omp_encode_batch: planted 1-sparse signals are recovered")
{
    Rng rng(11);
    const Dictionary d = test::gaussian_dictionary(16, 32, rng);
    Matrix x = Matrix::Zero(32, 32);
    for (Eigen::Index j = 0; j < 32; ++j) x(j, j) = 0.5 + rng.uniform();
    const SparseCodeSet set = omp_encode_batch(d, d.atoms() * x, 4);
    for (Eigen::Index j = 0; j < 32; ++j) {
        const auto& c = set.codes[static_cast<std::size_t>(j)];
        REQUIRE(c.support == std::vector<std::uint32_t>{static_cast<std::uint32_t>(j)});
        CHECK(std::abs(c.coefficients[0] - x(j, j)) < 1e-12);
    }
}

TEST_CASE("omp_encode_residual_batch thresholds against the reference columns")
{
    Rng rng(12);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const Matrix reference = test::gaussian(8, 5, rng) * 100.0;
    const Matrix residuals = test::gaussian(8, 5, rng) * 1e-3;
    // Residuals are far below 0.5 * ||reference||, so nothing is coded.
    const auto none = omp_encode_residual_batch(d, residuals, reference, 3, 0.5);
    for (const auto& c : none.codes) CHECK(c.empty());
    const auto all = omp_encode_residual_batch(d, residuals, reference, 3, 0.0);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(all.codes[static_cast<std::size_t>(i)] == omp_encode(d, residuals.col(i), 3, 0.0));
}

TEST_CASE("reconstruct")
{
    Rng rng(13);
    const Dictionary d = test::gaussian_dictionary(6, 12, rng);
    CHECK(reconstruct(d, SparseCode{{}, {}, 12}).norm() == 0.0);
    CHECK((reconstruct(d, SparseCode{{4}, {2.0}, 12}) - 2.0 * d.atoms().col(4)).norm() == 0.0);

    SparseCode c{{7, 1, 10}, {0.3, -1.2, 2.5}, 12};
    Vector dense = Vector::Zero(12);
    dense(7) = 0.3;
    dense(1) = -1.2;
    dense(10) = 2.5;
    CHECK((reconstruct(d, c) - d.atoms() * dense).norm() < 1e-12);
    CHECK((c.dense() - dense).norm() == 0.0);
}

TEST_CASE("reconstruction error equals the final residual")
{
    Rng rng(14);
    const Dictionary d = test::gaussian_dictionary(16, 32, rng);
    const Matrix y = test::gaussian(16, 20, rng);
    const SparseCodeSet set = omp_encode_batch(d, y, 4);
    const Matrix approx = reconstruct(d, set);
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
        const auto& c = set.codes[static_cast<std::size_t>(i)];
        CHECK(std::abs((y.col(i) - approx.col(i)).norm() - residual(d, y.col(i), c).norm()) < 1e-10);
    }
}

TEST_CASE("code_sum")
{
    const SparseCode a{{1}, {1.5}, 8};
    const SparseCode b{{2}, {-0.5}, 8};
    const SparseCode s = code_sum(a, b);
    CHECK(s.support == std::vector<std::uint32_t>{1, 2});
    CHECK(s.coefficients == std::vector<double>{1.5, -0.5});

    CHECK(code_sum(SparseCode{{3}, {1.0}, 8}, SparseCode{{3}, {-1.0}, 8}).empty());

    const SparseCode empty{{}, {}, 8};
    const SparseCode x{{5, 0, 7}, {0.1, 0.2, 0.3}, 8};
    CHECK(code_sum(x, empty) == x);

    CHECK_THROWS_AS(code_sum(x, SparseCode{{}, {}, 9}), Error);
}

TEST_CASE("code_sum support size follows set arithmetic")
{
    const std::size_t dim = 10;
    Rng rng(15);
    for (std::size_t k = 2; k <= 6; ++k) {
        for (std::size_t m = 1; m < k; ++m) {
            for (int trial = 0; trial < 20; ++trial) {
                SparseCode a{{}, {}, dim};
                SparseCode b{{}, {}, dim};
                std::set<std::uint32_t> sa;
                std::set<std::uint32_t> sb;
                while (sa.size() < m) sa.insert(static_cast<std::uint32_t>(rng.below(dim)));
                while (sb.size() < k - m) sb.insert(static_cast<std::uint32_t>(rng.below(dim)));
                for (auto j : sa) {
                    a.support.push_back(j);
                    a.coefficients.push_back(1.0 + rng.uniform());
                }
                for (auto j : sb) {
                    b.support.push_back(j);
                    b.coefficients.push_back(1.0 + rng.uniform());  // positive: no cancellation
                }
                std::size_t overlap = 0;
                for (auto j : sa) overlap += sb.count(j);
                const SparseCode s = code_sum(a, b);
                CHECK(s.nnz() == m + (k - m) - overlap);
                CHECK((s.dense() - (a.dense() + b.dense())).norm() < 1e-15);
            }
        }
    }
}

TEST_CASE("SparseCodeSet dense round trip and budget checks")
{
    Matrix x = Matrix::Zero(6, 3);
    x(1, 0) = 2.0;
    x(4, 0) = -1.0;
    x(5, 2) = 3.0;
    const SparseCodeSet set = SparseCodeSet::from_dense(x, 2);
    CHECK(set.dense() == x);
    CHECK(set.codes[1].empty());
    CHECK_THROWS_AS(SparseCodeSet::from_dense(x, 1), Error);

    const SparseCodeSet a = SparseCodeSet::from_dense(x, 2);
    CHECK_THROWS_AS(code_sum(a, a, 1), Error);
    CHECK(code_sum(a, a, 2).dense() == 2.0 * x);
}

TEST_CASE("support_stats")
{
    Rng rng(16);
    const Dictionary d = test::gaussian_dictionary(8, 16, rng);
    const SparseCodeSet set = omp_encode_batch(d, test::gaussian(8, 30, rng), 3);
    const SupportStats st = support_stats(set);
    REQUIRE(st.histogram.size() == 4);
    CHECK(st.histogram[3] == 30);
    CHECK(st.mean.value() == 3.0);

    const SupportStats none = support_stats(SparseCodeSet{{}, 3, 16});
    CHECK(none.histogram.empty());
    CHECK_FALSE(none.mean.has_value());

    Matrix x = Matrix::Zero(4, 4);
    x(0, 0) = 1;
    x(0, 1) = 1;
    x(1, 1) = 1;
    const SupportStats mixed = support_stats(SparseCodeSet::from_dense(x, 2));
    CHECK(mixed.histogram == std::vector<std::size_t>{2, 1, 1});
    CHECK(mixed.mean.value() == doctest::Approx(0.75));
}
