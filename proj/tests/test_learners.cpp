#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ecdl/error.hpp"
#include "ecdl/learners.hpp"
#include "ecdl/patches.hpp"
#include "test_util.hpp"

using namespace ecdl;

namespace {

const std::filesystem::path kFixtures = ECDL_FIXTURE_DIR;

void check_descent(const StepResult& s)
{
    REQUIRE_FALSE(s.descent.empty());
    for (const auto& d : s.descent) CHECK(d.after <= d.before * (1.0 + kDescentRelTol) + 1e-12);
}

void check_unit_atoms(const Dictionary& d)
{
    for (Eigen::Index j = 0; j < d.size(); ++j) CHECK(std::abs(d.atoms().col(j).norm() - 1.0) <= 1e-12);
}

std::size_t max_support(const SparseCodeSet& set)
{
    std::size_t m = 0;
    for (const auto& c : set.codes) m = std::max(m, c.nnz());
    return m;
}

// Exactly representable data: 1-sparse codes, which OMP recovers exactly, with every atom used.
struct Exact {
    Dictionary d;
    Matrix x;
    Matrix y;
};

Exact exact_instance()
{
    Rng rng(77);
    Dictionary d = test::gaussian_dictionary(16, 32, rng);
    Matrix x = test::planted_codes(32, 400, 1, rng);
    Matrix y = d.atoms() * x;
    return {std::move(d), std::move(x), std::move(y)};
}

double read_number(const std::filesystem::path& p)
{
    std::ifstream in(p);
    double v = NAN;
    in >> v;
    return v;
}

void check_fixture(const char* name, const StepResult& s, const Matrix& y)
{
    CAPTURE(name);
    const std::string stem = std::string("step_") + name;
    const Matrix dict = read_mat1(kFixtures / (stem + "_dict.mat1"));
    const Matrix codes = read_mat1(kFixtures / (stem + "_codes.mat1"));
    const double mse = read_number(kFixtures / (stem + "_mse.txt"));
    REQUIRE(dict.rows() == s.dictionary.dim());
    REQUIRE(dict.cols() == s.dictionary.size());
    CHECK((s.dictionary.atoms() - dict).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((s.codes.dense() - codes).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(code_mse(s.dictionary, y, s.codes) - mse) <= 1e-10);
}

}  // namespace

TEST_CASE("LearnConfig validation")
{
    LearnConfig c;
    CHECK_NOTHROW(c.validate());
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = LearnConfig{};
    c.algo = Algorithm::ecmod;
    c.k = 4;
    c.m = 4;
    CHECK_THROWS_AS(c.validate(), Error);
    c.m = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.m = 3;
    CHECK_NOTHROW(c.validate());
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = LearnConfig{};
    c.omp_tol = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = LearnConfig{};
    c.stop_delta = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = LearnConfig{};
    c.m = 8;  // m is ignored for MOD
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("algorithm and init names round trip")
{
    for (auto a : {Algorithm::mod, Algorithm::ecmod, Algorithm::ecmod_plus}) CHECK(parse_algorithm(to_string(a)) == a);
    for (auto m : {InitMode::dct, InitMode::random, InitMode::loaded}) CHECK(parse_init_mode(to_string(m)) == m);
    CHECK_FALSE(parse_algorithm("ksvd").has_value());
    CHECK(to_string(Algorithm::ecmod_plus) == "ecmodplus");
}

TEST_CASE("mod_step on exactly representable data does not increase the error")
{
    const Exact e = exact_instance();
    const Dictionary start = e.d;
    const double before = code_mse(start, e.y, omp_encode_batch(start, e.y, 2));
    const StepResult s = mod_step(start, e.y, 2);
    CHECK(code_mse(s.dictionary, e.y, s.codes) <= before + 1e-12);
    CHECK(s.atoms_repaired == 0);
    CHECK((s.dictionary.atoms() - e.d.atoms()).cwiseAbs().maxCoeff() < 1e-8);
    check_descent(s);
}

TEST_CASE("mod_step with a single sample keeps K unit-norm atoms")
{
    Rng rng(3);
    const Dictionary d = random_dictionary(8, 16, rng);
    const Matrix y = test::gaussian(8, 1, rng);
    const StepResult s = mod_step(d, y, 3);
    CHECK(s.dictionary.size() == 16);
    check_unit_atoms(s.dictionary);
    CHECK(degenerate_atoms(s.dictionary.atoms()).empty());
    CHECK(s.atoms_repaired >= 13);
}

TEST_CASE("mod_step rejects shape mismatch")
{
    Rng rng(4);
    const Dictionary d = random_dictionary(8, 16, rng);
    CHECK_THROWS_AS(mod_step(d, Matrix::Ones(9, 5), 2), Error);
    CHECK_THROWS_AS(ecmod_step(d, Matrix::Ones(8, 5), 2, 2), Error);
}

TEST_CASE("ecmod_step on exactly representable data degenerates to a MOD step")
{
    const Exact e = exact_instance();
    const StepResult ec = ecmod_step(e.d, e.y, 1, 2);
    REQUIRE(ec.error_codes.has_value());
    for (const auto& b : ec.error_codes->codes) CHECK(b.empty());
    const StepResult mod = mod_step(e.d, e.y, 1);
    CHECK((ec.dictionary.atoms() - mod.dictionary.atoms()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ec.descent.size() == 2);
    check_descent(ec);
}

TEST_CASE("ecmod_plus_step on exactly representable data is a fixed point")
{
    const Exact e = exact_instance();
    const StepResult s = ecmod_plus_step(e.d, e.y, 1, 2);
    CHECK(s.descent.size() == 3);
    for (Eigen::Index j = 0; j < e.d.size(); ++j) {
        const double cosine = std::abs(s.dictionary.atoms().col(j).dot(e.d.atoms().col(j)));
        CHECK(cosine == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("sparsity budgets hold at every stage")
{
    const auto fx = test::step_fixture();
    const StepResult mod = mod_step(fx.initial, fx.samples, 4);
    CHECK(max_support(mod.codes) <= 4);

    const StepResult ec = ecmod_step(fx.initial, fx.samples, 2, 4);
    REQUIRE(ec.stage_codes.has_value());
    REQUIRE(ec.error_codes.has_value());
    CHECK(ec.stage_codes->k_budget == 2);
    CHECK(ec.error_codes->k_budget == 2);
    CHECK(max_support(*ec.stage_codes) <= 2);
    CHECK(max_support(*ec.error_codes) <= 2);
    CHECK(max_support(ec.codes) <= 4);
    CHECK(ec.codes.k_budget == 4);

    const StepResult plus = ecmod_plus_step(fx.initial, fx.samples, 2, 4);
    CHECK(max_support(plus.codes) <= 4);
    CHECK(max_support(*plus.stage_codes) <= 2);
    CHECK(max_support(*plus.error_codes) <= 2);
}

TEST_CASE("descent invariant on the seeded fixture")
{
    const auto fx = test::step_fixture();
    check_descent(mod_step(fx.initial, fx.samples, 4));
    check_descent(ecmod_step(fx.initial, fx.samples, 2, 4));
    check_descent(ecmod_plus_step(fx.initial, fx.samples, 2, 4));
}

TEST_CASE("EcMOD+ final codes use at least as much support as EcMOD")
{
    const auto fx = test::step_fixture();
    const auto ec = support_stats(ecmod_step(fx.initial, fx.samples, 2, 4).codes);
    const auto plus = support_stats(ecmod_plus_step(fx.initial, fx.samples, 2, 4).codes);
    CHECK(plus.mean.value() >= ec.mean.value());
}

TEST_CASE("regression fixtures")
{
    const auto fx = test::step_fixture();
    check_fixture("mod", mod_step(fx.initial, fx.samples, 4), fx.samples);
    check_fixture("ecmod", ecmod_step(fx.initial, fx.samples, 2, 4), fx.samples);
    check_fixture("ecmodplus", ecmod_plus_step(fx.initial, fx.samples, 2, 4), fx.samples);
}

TEST_CASE("steps are thread-count independent")
{
    const auto fx = test::step_fixture();
    const StepResult a = ecmod_plus_step(fx.initial, fx.samples, 2, 4, kDefaultOmpTol, 1);
    const StepResult b = ecmod_plus_step(fx.initial, fx.samples, 2, 4, kDefaultOmpTol, 4);
    CHECK(a.dictionary.atoms() == b.dictionary.atoms());
    CHECK(a.codes == b.codes);
}

TEST_CASE("learn_step dispatches on the configured algorithm")
{
    const auto fx = test::step_fixture();
    LearnConfig c;
    c.k = 4;
    c.m = 2;
    c.algo = Algorithm::ecmod;
    CHECK(learn_step(c, fx.initial, fx.samples).dictionary.atoms() == ecmod_step(fx.initial, fx.samples, 2, 4).dictionary.atoms());
}

TEST_CASE("train: iteration budget and early stop")
{
    const auto fx = test::step_fixture();
    LearnConfig c;
    c.k = 4;
    c.m = 2;
    c.max_iters = 1;
    CHECK(train(c, fx.samples, fx.initial).trace.records.size() == 1);

    c.max_iters = 7;
    c.stop_delta = 0.0;
    const auto full = train(c, fx.samples, fx.initial);
    CHECK(full.trace.records.size() == 7);

    c.stop_delta = 0.5;  // any real step improves by less than half after the first
    const auto early = train(c, fx.samples, fx.initial);
    CHECK(early.trace.records.size() < 7);
}

TEST_CASE("train: trace consistency and determinism")
{
    const auto fx = test::step_fixture();
    LearnConfig c;
    c.algo = Algorithm::ecmod_plus;
    c.k = 4;
    c.m = 2;
    c.max_iters = 5;
    c.stop_delta = 0.0;

    struct Count : StepObserver {
        std::size_t calls = 0;
        void on_step(std::size_t iteration, const StepResult&) override { CHECK(iteration == ++calls); }
    } observer;

    const auto a = train(c, fx.samples, fx.initial, &observer);
    const auto b = train(c, fx.samples, fx.initial);
    CHECK(observer.calls == 5);
    REQUIRE(a.trace.records.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& r = a.trace.records[i];
        CHECK(r.iteration == i + 1);
        CHECK(r.mse >= 0.0);
        CHECK(std::abs(r.psnr_db - 10.0 * std::log10(255.0 * 255.0 / r.mse)) < 1e-9);
        CHECK(r.mean_support <= 4.0);
        CHECK(r.mse == b.trace.records[i].mse);
    }
    CHECK(a.dictionary.atoms() == b.dictionary.atoms());
    CHECK(trace_csv(a.trace, false) == trace_csv(b.trace, false));
}

TEST_CASE("train rejects invalid configs and shapes")
{
    const auto fx = test::step_fixture();
    LearnConfig c;
    c.algo = Algorithm::ecmod;
    c.k = 4;
    c.m = 4;
    CHECK_THROWS_AS(train(c, fx.samples, fx.initial), Error);
    c.m = 2;
    CHECK_THROWS_AS(train(c, Matrix::Ones(5, 10), fx.initial), Error);
}

TEST_CASE("evaluate_dictionary")
{
    const Exact e = exact_instance();
    const auto rows = evaluate_dictionary(e.d, e.y, {1, 2, 4});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].k == 1);
    CHECK(rows[1].psnr_db >= rows[0].psnr_db);
    CHECK(rows[2].mse < 1e-20);

    // Identity atoms make the one-atom fits exact in floating point.
    Matrix basis = Matrix::Zero(4, 5);
    basis.leftCols(4).setIdentity();
    basis.col(4).setConstant(0.5);
    Matrix exact_y = Matrix::Zero(4, 2);
    exact_y(1, 0) = 3.0;
    exact_y(2, 1) = -2.0;
    const auto perfect = evaluate_dictionary(Dictionary::from_matrix(basis), exact_y, {1});
    CHECK(perfect[0].mse == 0.0);
    CHECK(perfect[0].psnr_db == kPerfectPsnr);

    CHECK_THROWS_AS(evaluate_dictionary(e.d, e.y, {}), Error);
}

TEST_CASE("evaluate_dictionary PSNR is non-decreasing in k")
{
    Rng rng(9);
    const Dictionary d = test::gaussian_dictionary(16, 32, rng);
    const Matrix y = test::gaussian(16, 50, rng);
    const auto rows = evaluate_dictionary(d, y, {1, 2, 3, 4, 6, 8, 12, 16});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].psnr_db >= rows[i - 1].psnr_db);
    // Global MSE over all samples jointly.
    const auto codes = omp_encode_batch(d, y, 3);
    CHECK(std::abs(rows[2].mse - code_mse(d, y, codes)) < 1e-12);
}

TEST_CASE("CSV emitters")
{
    TrainTrace t;
    t.records.push_back({1, 0.5, psnr(0.5), 3.25, 2, 1.5});
    char expected[128];
    std::snprintf(expected, sizeof expected, "iter,mse,psnr_db,mean_support,atoms_repaired\n1,0.5,%.17g,3.25,2\n", psnr(0.5));
    CHECK(trace_csv(t, false) == expected);
    CHECK(trace_csv(t, true).rfind("iter,mse,psnr_db,mean_support,atoms_repaired,seconds\n", 0) == 0);
    CHECK(trace_csv(t, true).find(",1.5\n") != std::string::npos);
    CHECK(eval_csv({{2, 30.0, 0.25}}) == "k,psnr_db,mse\n2,30,0.25\n");
}
