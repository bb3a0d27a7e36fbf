#include "cli.hpp"

#include <cstdio>
#include <memory>
#include <ostream>

#include "CLI11.hpp"

namespace ecdl::cli {

namespace {

std::vector<ecdl_algorithm> parse_algos(const std::vector<std::string>& names)
{
    std::vector<ecdl_algorithm> out;
    for (const auto& n : names) {
        if (n == "mod") out.push_back(ECDL_ALGO_MOD);
        else if (n == "ecmod") out.push_back(ECDL_ALGO_ECMOD);
        else if (n == "ecmodplus") out.push_back(ECDL_ALGO_ECMODPLUS);
        else throw UsageError("--algo: unknown algorithm '" + n + "' (expected mod, ecmod or ecmodplus)", 2);
    }
    return out;
}

void check(ecdl_status status)
{
    if (status != ECDL_OK) throw UsageError(ecdl_last_error(), 2);
}

// Owns C handles for the duration of a command.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using MatrixHandle = Handle<ecdl_matrix, ecdl_matrix_free>;
using ImageHandle = Handle<ecdl_image, ecdl_image_free>;
using DictionaryHandle = Handle<ecdl_dictionary, ecdl_dictionary_free>;

class Failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void call(ecdl_status status, const char* what)
{
    if (status != ECDL_OK) {
        throw Failure(std::string(what) + ": " + ecdl_status_name(status) + ": " + ecdl_last_error());
    }
}

void load_samples(const Command& c, MatrixHandle& samples)
{
    if (!c.input.empty()) {
        call(ecdl_matrix_load(c.input.c_str(), samples.out()), "loading samples");
        return;
    }
    ImageHandle img;
    call(ecdl_image_load(c.image.c_str(), img.out()), "loading image");
    call(ecdl_extract_patches(img.get(), c.patch_size, c.stride, samples.out()), "extracting patches");
}

}  // namespace

ecdl_experiment_spec Command::experiment() const
{
    ecdl_experiment_spec s{};
    s.image_path = image.c_str();
    s.patch_size = patch_size;
    s.stride = stride;
    s.atoms = atoms;
    s.algos = algos.data();
    s.num_algos = algos.size();
    s.learn = learn;
    s.test_k = test_k.data();
    s.num_test_k = test_k.size();
    s.seeds = seeds.data();
    s.num_seeds = seeds.size();
    s.out_dir = out.c_str();
    s.timings = timings ? 1 : 0;
    return s;
}

Command parse_args(int argc, const char* const* argv)
{
    Command cmd;
    ecdl_learn_config_default(&cmd.learn);

    CLI::App app{"Dictionary learning with MOD, EcMOD and EcMOD+", "ecdl"};
    app.require_subcommand(1, 1);

    std::vector<std::string> algo_names{"mod"};
    std::string init = "dct";

    auto* learn = app.add_subcommand("learn", "Train dictionaries on image patches and write traces, dictionaries and evaluations");
    learn->add_option("--image", cmd.image, "8-bit binary PGM")->required();
    learn->add_option("--patch-size", cmd.patch_size, "Patch side length");
    learn->add_option("--stride", cmd.stride, "Patch stride (side = distinct, 1 = sliding)");
    learn->add_option("--atoms", cmd.atoms, "Dictionary size K");
    learn->add_option("--algo", algo_names, "mod|ecmod|ecmodplus (comma list allowed)")->delimiter(',');
    learn->add_option("--k", cmd.learn.k, "Sparsity budget");
    learn->add_option("--m", cmd.learn.m, "First-stage sparsity for error-coded learners");
    learn->add_option("--iters", cmd.learn.max_iters, "Maximum iterations");
    learn->add_option("--init", init, "dct|random")->check(CLI::IsMember({"dct", "random"}));
    learn->add_option("--seeds", cmd.seeds, "Comma list of seeds for random initialization")->delimiter(',');
    learn->add_option("--omp-tol", cmd.learn.omp_tol, "Relative OMP residual threshold");
    learn->add_option("--stop-delta", cmd.learn.stop_delta, "Stop when relative MSE improvement falls below this (0 disables)");
    learn->add_option("--test-k", cmd.test_k, "Comma list of evaluation sparsities")->delimiter(',');
    learn->add_option("--out", cmd.out, "Output directory")->required();
    learn->add_flag("--timings", cmd.timings, "Add an elapsed-seconds column to traces");
    learn->add_option("--threads", cmd.learn.threads, "Sparse coding worker threads");

    auto* extract = app.add_subcommand("extract", "Extract image patches into a MAT1 matrix");
    extract->add_option("--image", cmd.image, "8-bit binary PGM")->required();
    extract->add_option("--patch-size", cmd.patch_size, "Patch side length");
    extract->add_option("--stride", cmd.stride, "Patch stride");
    extract->add_option("--out", cmd.out, "Output MAT1 file")->required();

    auto* encode = app.add_subcommand("encode", "OMP-code MAT1 samples with a dictionary");
    encode->add_option("--dict", cmd.dict, "Dictionary MAT1 (n x K)")->required();
    encode->add_option("--input", cmd.input, "Samples MAT1 (n x M)")->required();
    encode->add_option("--k", cmd.learn.k, "Sparsity budget");
    encode->add_option("--omp-tol", cmd.learn.omp_tol, "Relative OMP residual threshold");
    encode->add_option("--out", cmd.out, "Output code matrix MAT1 (K x M)")->required();
    encode->add_option("--threads", cmd.learn.threads, "Worker threads");

    auto* evaluate = app.add_subcommand("evaluate", "Approximation PSNR of a dictionary at several sparsities");
    evaluate->add_option("--dict", cmd.dict, "Dictionary MAT1")->required();
    auto* ev_input = evaluate->add_option("--input", cmd.input, "Samples MAT1");
    auto* ev_image = evaluate->add_option("--image", cmd.image, "8-bit binary PGM");
    ev_input->excludes(ev_image);
    evaluate->add_option("--patch-size", cmd.patch_size, "Patch side length");
    evaluate->add_option("--stride", cmd.stride, "Patch stride");
    evaluate->add_option("--test-k", cmd.test_k, "Comma list of sparsities")->delimiter(',');
    evaluate->add_option("--omp-tol", cmd.learn.omp_tol, "Relative OMP residual threshold");
    evaluate->add_option("--out", cmd.out, "CSV output (default: standard output)");
    evaluate->add_option("--threads", cmd.learn.threads, "Worker threads");

    auto* mosaic = app.add_subcommand("mosaic", "Render dictionary atoms as a PGM mosaic");
    auto* mo_dict = mosaic->add_option("--dict", cmd.dict, "Dictionary MAT1");
    auto* mo_dct = mosaic->add_flag("--dct", cmd.dct, "Render the overcomplete DCT dictionary instead");
    mo_dict->excludes(mo_dct);
    mosaic->add_option("--patch-size", cmd.patch_size, "Patch side for --dct");
    mosaic->add_option("--atoms", cmd.atoms, "Atom count for --dct");
    mosaic->add_option("--out", cmd.out, "Output PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help(), 0);
    } catch (const CLI::CallForAllHelp&) {
        throw UsageError(app.help("", CLI::AppFormatMode::All), 0);
    } catch (const CLI::ParseError& e) {
        throw UsageError(std::string(e.what()) + "\nRun with --help for usage.", e.get_exit_code() == 0 ? 2 : e.get_exit_code());
    }

    cmd.name = app.get_subcommands().front()->get_name();
    cmd.algos = parse_algos(algo_names);
    cmd.learn.init = init == "random" ? ECDL_INIT_RANDOM : ECDL_INIT_DCT;
    if (cmd.learn.threads == 0) cmd.learn.threads = 1;

    if (cmd.name == "learn") {
        const auto spec = cmd.experiment();
        check(ecdl_experiment_validate(&spec));
    } else if (cmd.name == "evaluate") {
        if (cmd.input.empty() && cmd.image.empty()) throw UsageError("evaluate: one of --input or --image is required", 2);
        if (cmd.test_k.empty()) throw UsageError("evaluate: --test-k is empty", 2);
    } else if (cmd.name == "mosaic") {
        if (cmd.dict.empty() && !cmd.dct) throw UsageError("mosaic: one of --dict or --dct is required", 2);
    } else if (cmd.name == "encode") {
        if (cmd.learn.k < 1) throw UsageError("encode: --k must be at least 1", 2);
    }
    return cmd;
}

int run(const Command& c, std::ostream& out, std::ostream& err)
{
    try {
        if (c.name == "learn") {
            const auto spec = c.experiment();
            call(ecdl_run_experiment(&spec), "learn");
            out << "wrote results to " << c.out << "\n";
        } else if (c.name == "extract") {
            ImageHandle img;
            MatrixHandle patches;
            call(ecdl_image_load(c.image.c_str(), img.out()), "loading image");
            call(ecdl_extract_patches(img.get(), c.patch_size, c.stride, patches.out()), "extracting patches");
            call(ecdl_matrix_save(patches.get(), c.out.c_str()), "saving patches");
            out << ecdl_matrix_cols(patches.get()) << " patches of dimension " << ecdl_matrix_rows(patches.get()) << "\n";
        } else if (c.name == "encode") {
            DictionaryHandle dict;
            MatrixHandle samples;
            MatrixHandle codes;
            call(ecdl_dictionary_load(c.dict.c_str(), dict.out()), "loading dictionary");
            call(ecdl_matrix_load(c.input.c_str(), samples.out()), "loading samples");
            call(ecdl_encode(dict.get(), samples.get(), c.learn.k, c.learn.omp_tol, c.learn.threads, codes.out()), "encoding");
            call(ecdl_matrix_save(codes.get(), c.out.c_str()), "saving codes");
        } else if (c.name == "evaluate") {
            DictionaryHandle dict;
            MatrixHandle samples;
            call(ecdl_dictionary_load(c.dict.c_str(), dict.out()), "loading dictionary");
            load_samples(c, samples);
            std::vector<double> psnr(c.test_k.size());
            std::vector<double> mse(c.test_k.size());
            call(ecdl_evaluate(dict.get(), samples.get(), c.test_k.data(), c.test_k.size(), c.learn.omp_tol, c.learn.threads,
                               psnr.data(), mse.data()),
                 "evaluating");
            std::string csv = "k,psnr_db,mse\n";
            char line[96];
            for (std::size_t i = 0; i < c.test_k.size(); ++i) {
                std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", c.test_k[i], psnr[i], mse[i]);
                csv += line;
            }
            if (c.out.empty()) {
                out << csv;
            } else {
                std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(c.out.c_str(), "wb"), std::fclose);
                if (!f || std::fwrite(csv.data(), 1, csv.size(), f.get()) != csv.size()) throw Failure("cannot write " + c.out);
            }
        } else if (c.name == "mosaic") {
            DictionaryHandle dict;
            if (c.dct) {
                call(ecdl_dictionary_dct(c.patch_size, c.atoms, dict.out()), "building dct dictionary");
            } else {
                call(ecdl_dictionary_load(c.dict.c_str(), dict.out()), "loading dictionary");
            }
            call(ecdl_dictionary_mosaic(dict.get(), c.out.c_str()), "writing mosaic");
        } else {
            err << "unknown command " << c.name << "\n";
            return 2;
        }
    } catch (const Failure& e) {
        err << "ecdl: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace ecdl::cli
