#include "ecdl/learners.hpp"

#include <chrono>
#include <cstdio>

#include "ecdl/patches.hpp"

namespace ecdl {

namespace {

// Seed for the fallback random atoms used when repair runs out of samples.
constexpr std::uint64_t kRepairSeed = 0x9e3779b97f4a7c15ULL;

double squared_error(const Matrix& atoms, const Matrix& y, const SparseCodeSet& codes)
{
    double sum = 0.0;
    Vector r(y.rows());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& c = codes.codes[i];
        r = y.col(static_cast<Eigen::Index>(i));
        for (std::size_t s = 0; s < c.support.size(); ++s) r -= c.coefficients[s] * atoms.col(c.support[s]);
        sum += r.squaredNorm();
    }
    return sum;
}

void drop_atoms(SparseCodeSet& codes, const std::vector<bool>& dropped)
{
    for (auto& c : codes.codes) {
        std::size_t w = 0;
        for (std::size_t s = 0; s < c.support.size(); ++s) {
            if (dropped[c.support[s]]) continue;
            c.support[w] = c.support[s];
            c.coefficients[w] = c.coefficients[s];
            ++w;
        }
        c.support.resize(w);
        c.coefficients.resize(w);
    }
}

struct Update {
    Dictionary dictionary;
    SparseCodeSet codes;
    std::size_t repaired = 0;
    DescentCheck descent;
};

// D <- Y X^+, then unit-normalize atoms (rescaling codes so D X is unchanged)
// and repair zero or duplicate atoms. Codes on replaced atoms are dropped.
Update update_dictionary(const Matrix& y, SparseCodeSet codes, const Dictionary& previous)
{
    const auto lsq = least_squares_dictionary(y, codes.dense());

    DescentCheck check{squared_error(previous.atoms(), y, codes), squared_error(lsq.dictionary, y, codes)};
    const double slack = kDescentRelTol * std::max(check.before, y.squaredNorm());
    require(check.after <= check.before + slack, ErrorCode::numeric,
            "dictionary update increased the objective from " + std::to_string(check.before) + " to " + std::to_string(check.after));

    auto normalized = normalize_columns(lsq.dictionary);
    std::vector<bool> dropped(static_cast<std::size_t>(lsq.dictionary.cols()), false);
    for (const auto j : normalized.zero_columns) dropped[j] = true;
    for (auto& c : codes.codes) {
        for (std::size_t s = 0; s < c.support.size(); ++s) c.coefficients[s] *= normalized.scales[c.support[s]];
    }
    drop_atoms(codes, dropped);

    std::vector<double> residuals(codes.size());
    Vector r(y.rows());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto& c = codes.codes[i];
        r = y.col(static_cast<Eigen::Index>(i));
        for (std::size_t s = 0; s < c.support.size(); ++s) r -= c.coefficients[s] * normalized.atoms.col(c.support[s]);
        residuals[i] = r.norm();
    }

    Rng rng(kRepairSeed);
    auto repair = replace_degenerate_atoms(normalized.atoms, y, residuals, rng, RepairOverflow::random);
    for (const auto j : repair.replaced) dropped[j] = true;
    drop_atoms(codes, dropped);
    return {std::move(repair.dictionary), std::move(codes), repair.replaced.size(), check};
}

void require_shapes(const Dictionary& d, const Matrix& y)
{
    require(y.rows() == d.dim(), ErrorCode::dimension_mismatch,
            "training samples have dimension " + std::to_string(y.rows()) + " but the dictionary has " + std::to_string(d.dim()));
    require(y.cols() >= 1, ErrorCode::invalid_argument, "no training samples");
}

void require_split(std::size_t m, std::size_t k)
{
    require(m >= 1 && m < k, ErrorCode::invalid_argument,
            "error-coded learning needs 1 <= m < k, got m=" + std::to_string(m) + " k=" + std::to_string(k));
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::mod: return "mod";
    case Algorithm::ecmod: return "ecmod";
    case Algorithm::ecmod_plus: return "ecmodplus";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view s)
{
    if (s == "mod") return Algorithm::mod;
    if (s == "ecmod") return Algorithm::ecmod;
    if (s == "ecmodplus") return Algorithm::ecmod_plus;
    return std::nullopt;
}

std::string_view to_string(InitMode m)
{
    switch (m) {
    case InitMode::dct: return "dct";
    case InitMode::random: return "random";
    case InitMode::loaded: return "loaded";
    }
    return "?";
}

std::optional<InitMode> parse_init_mode(std::string_view s)
{
    if (s == "dct") return InitMode::dct;
    if (s == "random") return InitMode::random;
    if (s == "loaded") return InitMode::loaded;
    return std::nullopt;
}

void LearnConfig::validate() const
{
    require(k >= 1, ErrorCode::invalid_argument, "k must be at least 1");
    if (algo != Algorithm::mod) require_split(m, k);
    require(max_iters >= 1, ErrorCode::invalid_argument, "max_iters must be at least 1");
    require(omp_tol >= 0.0, ErrorCode::invalid_argument, "omp_tol must be non-negative");
    require(stop_delta >= 0.0, ErrorCode::invalid_argument, "stop_delta must be non-negative");
}

double code_mse(const Dictionary& d, const Matrix& y, const SparseCodeSet& codes)
{
    require(codes.size() == static_cast<std::size_t>(y.cols()), ErrorCode::dimension_mismatch, "one code per sample required");
    return squared_error(d.atoms(), y, codes) / static_cast<double>(y.size());
}

StepResult mod_step(const Dictionary& d, const Matrix& y, std::size_t k, double omp_tol, unsigned threads)
{
    require_shapes(d, y);
    auto x = omp_encode_batch(d, y, k, omp_tol, threads);
    auto u = update_dictionary(y, std::move(x), d);
    return {std::move(u.dictionary), std::move(u.codes), u.repaired, {u.descent}, std::nullopt, std::nullopt};
}

StepResult ecmod_step(const Dictionary& d, const Matrix& y, std::size_t m, std::size_t k, double omp_tol, unsigned threads)
{
    require_shapes(d, y);
    require_split(m, k);

    auto a = omp_encode_batch(d, y, m, omp_tol, threads);
    auto first = update_dictionary(y, std::move(a), d);

    // The error is taken against the intermediate dictionary, and its coding
    // stops at the same threshold the first stage used for each sample.
    const Matrix error = y - reconstruct(first.dictionary, first.codes);
    auto b = omp_encode_residual_batch(first.dictionary, error, y, k - m, omp_tol, threads);
    auto combined = code_sum(first.codes, b, k);

    bool any = false;
    for (const auto& c : combined.codes) any = any || !c.empty();
    require(any, ErrorCode::degenerate, "ecmod: combined code matrix is all zero");

    auto second = update_dictionary(y, std::move(combined), first.dictionary);
    return {std::move(second.dictionary), std::move(second.codes), first.repaired + second.repaired,
            {first.descent, second.descent}, std::move(first.codes), std::move(b)};
}

StepResult ecmod_plus_step(const Dictionary& d, const Matrix& y, std::size_t m, std::size_t k, double omp_tol, unsigned threads)
{
    auto ec = ecmod_step(d, y, m, k, omp_tol, threads);
    auto x = omp_encode_batch(ec.dictionary, y, k, omp_tol, threads);
    auto u = update_dictionary(y, std::move(x), ec.dictionary);
    ec.descent.push_back(u.descent);
    return {std::move(u.dictionary), std::move(u.codes), ec.atoms_repaired + u.repaired, std::move(ec.descent),
            std::move(ec.stage_codes), std::move(ec.error_codes)};
}

StepResult learn_step(const LearnConfig& config, const Dictionary& d, const Matrix& y)
{
    switch (config.algo) {
    case Algorithm::mod: return mod_step(d, y, config.k, config.omp_tol, config.threads);
    case Algorithm::ecmod: return ecmod_step(d, y, config.m, config.k, config.omp_tol, config.threads);
    case Algorithm::ecmod_plus: return ecmod_plus_step(d, y, config.m, config.k, config.omp_tol, config.threads);
    }
    fail(ErrorCode::invalid_argument, "unknown algorithm");
}

TrainResult train(const LearnConfig& config, const Matrix& y, const Dictionary& initial, StepObserver* observer)
{
    config.validate();
    require_shapes(initial, y);

    Dictionary current = initial;
    TrainTrace trace;
    std::optional<double> previous;
    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        const auto start = std::chrono::steady_clock::now();
        std::optional<StepResult> step;
        try {
            step.emplace(learn_step(config, current, y));
        } catch (const Error& e) {
            throw TrainError(e, trace);
        }
        const double mse = code_mse(step->dictionary, y, step->codes);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        trace.records.push_back({it, mse, psnr(mse), support_stats(step->codes).mean.value_or(0.0), step->atoms_repaired, seconds});
        if (observer) observer->on_step(it, *step);
        current = std::move(step->dictionary);

        if (config.stop_delta > 0.0 && previous) {
            if (*previous == 0.0) break;
            if ((*previous - mse) / *previous < config.stop_delta) break;
        }
        previous = mse;
    }
    return {std::move(current), std::move(trace)};
}

std::vector<EvalRow> evaluate_dictionary(const Dictionary& d, const Matrix& y_test, const std::vector<std::size_t>& k_list,
                                         double omp_tol, unsigned threads)
{
    require(!k_list.empty(), ErrorCode::invalid_argument, "evaluate_dictionary: empty k list");
    require_shapes(d, y_test);
    std::vector<EvalRow> rows;
    for (const auto k : k_list) {
        const auto codes = omp_encode_batch(d, y_test, k, omp_tol, threads);
        const double mse = code_mse(d, y_test, codes);
        rows.push_back({k, psnr(mse), mse});
    }
    return rows;
}

std::string trace_csv(const TrainTrace& trace, bool with_seconds)
{
    std::string out = with_seconds ? "iter,mse,psnr_db,mean_support,atoms_repaired,seconds\n"
                                   : "iter,mse,psnr_db,mean_support,atoms_repaired\n";
    for (const auto& r : trace.records) {
        out += std::to_string(r.iteration) + "," + format_number(r.mse) + "," + format_number(r.psnr_db) + "," +
               format_number(r.mean_support) + "," + std::to_string(r.atoms_repaired);
        if (with_seconds) out += "," + format_number(r.seconds);
        out += "\n";
    }
    return out;
}

std::string eval_csv(const std::vector<EvalRow>& rows)
{
    std::string out = "k,psnr_db,mse\n";
    for (const auto& r : rows) out += std::to_string(r.k) + "," + format_number(r.psnr_db) + "," + format_number(r.mse) + "\n";
    return out;
}

}  // namespace ecdl
