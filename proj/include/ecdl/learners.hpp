#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecdl/dictionary.hpp"
#include "ecdl/error.hpp"
#include "ecdl/matrix.hpp"
#include "ecdl/omp.hpp"

namespace ecdl {

enum class Algorithm { mod, ecmod, ecmod_plus };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view s);
std::string_view to_string(InitMode m);
std::optional<InitMode> parse_init_mode(std::string_view s);

struct LearnConfig {
    Algorithm algo = Algorithm::mod;
    std::size_t k = 8;
    std::size_t m = 4;
    std::size_t max_iters = 40;
    double omp_tol = kDefaultOmpTol;
    double stop_delta = 1e-6;  // relative MSE improvement below which training stops
    std::uint64_t seed = 0;
    InitMode init = InitMode::dct;
    unsigned threads = 1;  // batch OMP workers; results do not depend on it

    void validate() const;
};

/// Objective ||Y - D X||_F^2 before and after one least-squares update with the codes fixed.
struct DescentCheck {
    double before = 0.0;
    double after = 0.0;
};

/// Relative slack allowed on the descent check.
inline constexpr double kDescentRelTol = 1e-9;

struct StepResult {
    Dictionary dictionary;
    SparseCodeSet codes;  // codes consistent with `dictionary` (rescaled, repaired atoms dropped)
    std::size_t atoms_repaired = 0;
    std::vector<DescentCheck> descent;
    // Error-coded steps only: first-stage codes (budget m) and error codes (budget k - m).
    std::optional<SparseCodeSet> stage_codes;
    std::optional<SparseCodeSet> error_codes;
};

StepResult mod_step(const Dictionary& d, const Matrix& y, std::size_t k, double omp_tol = kDefaultOmpTol, unsigned threads = 1);

StepResult ecmod_step(const Dictionary& d, const Matrix& y, std::size_t m, std::size_t k, double omp_tol = kDefaultOmpTol,
                      unsigned threads = 1);

StepResult ecmod_plus_step(const Dictionary& d, const Matrix& y, std::size_t m, std::size_t k,
                           double omp_tol = kDefaultOmpTol, unsigned threads = 1);

StepResult learn_step(const LearnConfig& config, const Dictionary& d, const Matrix& y);

struct TraceRecord {
    std::size_t iteration = 0;  // 1-based
    double mse = 0.0;
    double psnr_db = 0.0;
    double mean_support = 0.0;
    std::size_t atoms_repaired = 0;
    double seconds = 0.0;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
};

struct TrainResult {
    Dictionary dictionary;
    TrainTrace trace;
};

/// Raised when a step fails mid-run; carries the records completed so far.
class TrainError : public Error {
public:
    TrainError(const Error& cause, TrainTrace partial)
        : Error(cause.code(), cause.what()), partial_(std::move(partial)) {}

    const TrainTrace& partial_trace() const noexcept { return partial_; }

private:
    TrainTrace partial_;
};

/// Optional per-step hook, called after each completed iteration.
struct StepObserver {
    virtual ~StepObserver() = default;
    virtual void on_step(std::size_t iteration, const StepResult& step) = 0;
};

/// Runs the configured step until max_iters, or until the relative MSE
/// improvement over one iteration drops below stop_delta (when positive).
TrainResult train(const LearnConfig& config, const Matrix& y, const Dictionary& initial, StepObserver* observer = nullptr);

/// Training objective for a set of codes, ||Y - D X||_F^2 / (n M).
double code_mse(const Dictionary& d, const Matrix& y, const SparseCodeSet& codes);

struct EvalRow {
    std::size_t k = 0;
    double psnr_db = 0.0;
    double mse = 0.0;
};

/// Codes the test matrix at each sparsity and reports one global MSE/PSNR per k.
std::vector<EvalRow> evaluate_dictionary(const Dictionary& d, const Matrix& y_test, const std::vector<std::size_t>& k_list,
                                         double omp_tol = kDefaultOmpTol, unsigned threads = 1);

// CSV emitters. Numbers use 17 significant digits so output is byte-stable.
std::string trace_csv(const TrainTrace& trace, bool with_seconds);
std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace ecdl
