#include "ecdl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ecdl/error.hpp"

namespace ecdl {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot open " + path.string() + " for writing");
    out << text;
    require(static_cast<bool>(out), ErrorCode::io, "write failed: " + path.string());
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t perfect_square_root(std::size_t v)
{
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v))));
    return r * r == v ? r : 0;
}

}  // namespace

void ExperimentSpec::validate() const
{
    require(patch_side >= 1 && stride >= 1, ErrorCode::invalid_argument, "patch size and stride must be positive");
    require(atoms >= patch_side * patch_side, ErrorCode::invalid_argument,
            "dictionary needs at least " + std::to_string(patch_side * patch_side) + " atoms");
    require(!algorithms.empty(), ErrorCode::invalid_argument, "no algorithm selected");
    require(!test_k.empty(), ErrorCode::invalid_argument, "test k list is empty");
    require(!out_dir.empty(), ErrorCode::invalid_argument, "output directory is required");
    for (const auto a : algorithms) {
        LearnConfig c = learn;
        c.algo = a;
        c.validate();
    }
    require(learn.init != InitMode::loaded, ErrorCode::invalid_argument, "experiments initialize with dct or random");
    if (learn.init == InitMode::random) require(!seeds.empty(), ErrorCode::invalid_argument, "random initialization requires at least one seed");
    if (learn.init == InitMode::dct) {
        require(perfect_square_root(atoms) >= patch_side, ErrorCode::invalid_argument,
                "dct initialization needs a perfect-square atom count of at least patch_size^2");
    }
}

ExperimentReport run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const GrayImage img = load_pgm(spec.image);
    return run_experiment(spec, extract_patches(img, spec.patch_side, spec.stride).data);
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const Matrix& samples)
{
    spec.validate();
    require(samples.rows() == static_cast<Eigen::Index>(spec.patch_side * spec.patch_side), ErrorCode::dimension_mismatch,
            "sample dimension does not match patch size");
    std::filesystem::create_directories(spec.out_dir);

    ExperimentReport report;
    std::map<Algorithm, std::vector<std::vector<double>>> curves;

    std::vector<std::string> labels;
    if (spec.learn.init == InitMode::dct) {
        labels.emplace_back("dct");
    } else {
        for (const auto s : spec.seeds) labels.push_back(std::to_string(s));
    }

    for (const auto algo : spec.algorithms) {
        LearnConfig config = spec.learn;
        config.algo = algo;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            const std::string stem = std::string(to_string(algo)) + "_" + labels[r];
            Dictionary d0 = [&] {
                if (spec.learn.init == InitMode::dct) return overcomplete_dct(spec.patch_side, spec.atoms);
                Rng rng(spec.seeds[r]);
                return random_dictionary(spec.patch_side * spec.patch_side, spec.atoms, rng);
            }();
            config.seed = spec.learn.init == InitMode::dct ? 0 : spec.seeds[r];

            const auto trace_path = spec.out_dir / ("trace_" + stem + ".csv");
            TrainResult result = [&] {
                try {
                    return train(config, samples, d0);
                } catch (const TrainError& e) {
                    write_text(trace_path, trace_csv(e.partial_trace(), spec.timings));
                    throw;
                }
            }();
            write_text(trace_path, trace_csv(result.trace, spec.timings));
            report.files.push_back(trace_path);

            const auto dict_path = spec.out_dir / ("dict_" + stem + ".mat1");
            write_mat1(result.dictionary.atoms(), dict_path);
            report.files.push_back(dict_path);

            const auto eval_path = spec.out_dir / ("eval_" + stem + ".csv");
            write_text(eval_path, eval_csv(evaluate_dictionary(result.dictionary, samples, spec.test_k, config.omp_tol, config.threads)));
            report.files.push_back(eval_path);

            std::vector<double> curve;
            for (const auto& rec : result.trace.records) curve.push_back(rec.psnr_db);
            report.runs.push_back({algo, labels[r], curve.back()});
            curves[algo].push_back(std::move(curve));
        }
    }

    // Runs that stopped early carry their final value forward.
    std::string summary = "algo,iter,runs,min_psnr_db,mean_psnr_db,max_psnr_db\n";
    for (const auto algo : spec.algorithms) {
        const auto& runs = curves[algo];
        std::size_t longest = 0;
        for (const auto& c : runs) longest = std::max(longest, c.size());
        for (std::size_t it = 0; it < longest; ++it) {
            double lo = INFINITY;
            double hi = -INFINITY;
            double sum = 0.0;
            for (const auto& c : runs) {
                const double v = c[std::min(it, c.size() - 1)];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            summary += std::string(to_string(algo)) + "," + std::to_string(it + 1) + "," + std::to_string(runs.size()) + "," +
                       fmt(lo) + "," + fmt(sum / static_cast<double>(runs.size())) + "," + fmt(hi) + "\n";
        }
    }
    const auto summary_path = spec.out_dir / "summary.csv";
    write_text(summary_path, summary);
    report.files.push_back(summary_path);
    return report;
}

GrayImage dictionary_mosaic(const Matrix& atoms)
{
    const auto n = static_cast<std::size_t>(atoms.rows());
    const std::size_t side = perfect_square_root(n);
    require(side > 0, ErrorCode::invalid_argument, "mosaic: atom dimension " + std::to_string(n) + " is not a perfect square");
    const auto count = static_cast<std::size_t>(atoms.cols());
    require(count >= 1, ErrorCode::invalid_argument, "mosaic: no atoms");

    std::size_t grid = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    while (grid * grid < count) ++grid;
    while (grid > 1 && (grid - 1) * (grid - 1) >= count) --grid;
    const std::size_t grid_rows = (count + grid - 1) / grid;

    GrayImage img;
    img.width = grid * (side + 1) + 1;
    img.height = grid_rows * (side + 1) + 1;
    img.pixels.assign(img.width * img.height, 0);

    for (std::size_t a = 0; a < count; ++a) {
        const auto col = atoms.col(static_cast<Eigen::Index>(a));
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        const std::size_t top = (a / grid) * (side + 1) + 1;
        const std::size_t left = (a % grid) * (side + 1) + 1;
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                std::uint8_t v = 128;
                if (hi > lo) {
                    const double scaled = (col[static_cast<Eigen::Index>(r * side + c)] - lo) / (hi - lo) * 255.0;
                    v = static_cast<std::uint8_t>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
                }
                img.pixels[(top + r) * img.width + left + c] = v;
            }
        }
    }
    return img;
}

void export_dictionary_mosaic(const Dictionary& d, const std::filesystem::path& path)
{
    save_pgm(dictionary_mosaic(d.atoms()), path);
}

}  // namespace ecdl
