#include "ecdl/ecdl.h"

#include <cstdio>
#include <exception>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "ecdl/harness.hpp"

struct ecdl_matrix {
    ecdl::Matrix value;
};

struct ecdl_image {
    ecdl::GrayImage value;
};

struct ecdl_dictionary {
    ecdl::Dictionary value;
};

struct ecdl_trace {
    ecdl::TrainTrace value;
};

namespace {

thread_local std::string last_error;

ecdl_status record(ecdl_status status, const char* what)
{
    last_error = what;
    return status;
}

template <typename Fn>
ecdl_status guarded(Fn&& fn)
{
    try {
        fn();
        return ECDL_OK;
    } catch (const ecdl::Error& e) {
        return record(static_cast<ecdl_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return record(ECDL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return record(ECDL_ERR_INTERNAL, e.what());
    } catch (...) {
        return record(ECDL_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* name)
{
    ecdl::require(p != nullptr, ecdl::ErrorCode::invalid_argument, std::string(name) + " is null");
}

ecdl::LearnConfig to_cpp(const ecdl_learn_config& c)
{
    ecdl::LearnConfig out;
    switch (c.algo) {
    case ECDL_ALGO_MOD: out.algo = ecdl::Algorithm::mod; break;
    case ECDL_ALGO_ECMOD: out.algo = ecdl::Algorithm::ecmod; break;
    case ECDL_ALGO_ECMODPLUS: out.algo = ecdl::Algorithm::ecmod_plus; break;
    default: ecdl::fail(ecdl::ErrorCode::invalid_argument, "unknown algorithm");
    }
    switch (c.init) {
    case ECDL_INIT_DCT: out.init = ecdl::InitMode::dct; break;
    case ECDL_INIT_RANDOM: out.init = ecdl::InitMode::random; break;
    case ECDL_INIT_LOADED: out.init = ecdl::InitMode::loaded; break;
    default: ecdl::fail(ecdl::ErrorCode::invalid_argument, "unknown init mode");
    }
    out.k = c.k;
    out.m = c.m;
    out.max_iters = c.max_iters;
    out.omp_tol = c.omp_tol;
    out.stop_delta = c.stop_delta;
    out.seed = c.seed;
    out.threads = c.threads == 0 ? 1 : c.threads;
    return out;
}

ecdl::ExperimentSpec to_cpp(const ecdl_experiment_spec& s)
{
    need(s.image_path, "image_path");
    need(s.out_dir, "out_dir");
    ecdl::require(s.num_algos == 0 || s.algos, ecdl::ErrorCode::invalid_argument, "algos is null");
    ecdl::require(s.num_test_k == 0 || s.test_k, ecdl::ErrorCode::invalid_argument, "test_k is null");
    ecdl::require(s.num_seeds == 0 || s.seeds, ecdl::ErrorCode::invalid_argument, "seeds is null");

    ecdl::ExperimentSpec out;
    out.image = s.image_path;
    out.patch_side = s.patch_size;
    out.stride = s.stride;
    out.atoms = s.atoms;
    out.learn = to_cpp(s.learn);
    out.algorithms.clear();
    for (std::size_t i = 0; i < s.num_algos; ++i) {
        ecdl_learn_config c = s.learn;
        c.algo = s.algos[i];
        out.algorithms.push_back(to_cpp(c).algo);
    }
    out.test_k.assign(s.test_k, s.test_k + s.num_test_k);
    out.seeds.assign(s.seeds, s.seeds + s.num_seeds);
    out.out_dir = s.out_dir;
    out.timings = s.timings != 0;
    return out;
}

template <typename T, typename V>
void emit(T** out, V&& value)
{
    *out = new T{std::forward<V>(value)};
}

}  // namespace

extern "C" {

const char* ecdl_version(void) { return "1.0.0"; }

const char* ecdl_last_error(void) { return last_error.c_str(); }

const char* ecdl_status_name(ecdl_status status)
{
    switch (status) {
    case ECDL_OK: return "ok";
    case ECDL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ECDL_ERR_DIMENSION: return "dimension mismatch";
    case ECDL_ERR_IO: return "i/o error";
    case ECDL_ERR_UNSUPPORTED_FORMAT: return "unsupported format";
    case ECDL_ERR_MALFORMED_HEADER: return "malformed header";
    case ECDL_ERR_UNSUPPORTED_MAXVAL: return "unsupported maxval";
    case ECDL_ERR_TRUNCATED: return "truncated data";
    case ECDL_ERR_NUMERIC: return "numerical failure";
    case ECDL_ERR_DEGENERATE: return "degenerate input";
    case ECDL_ERR_COVERAGE_GAP: return "coverage gap";
    case ECDL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void ecdl_learn_config_default(ecdl_learn_config* config)
{
    if (!config) return;
    const ecdl::LearnConfig d;
    *config = ecdl_learn_config{ECDL_ALGO_MOD, d.k, d.m, d.max_iters, d.omp_tol, d.stop_delta, d.seed, ECDL_INIT_DCT, d.threads};
}

ecdl_status ecdl_learn_config_validate(const ecdl_learn_config* config)
{
    return guarded([&] {
        need(config, "config");
        to_cpp(*config).validate();
    });
}

ecdl_status ecdl_matrix_create(size_t rows, size_t cols, const double* data, ecdl_matrix** out)
{
    return guarded([&] {
        need(out, "out");
        ecdl::require(rows >= 1 && cols >= 1, ecdl::ErrorCode::invalid_argument, "matrix dimensions must be positive");
        ecdl::Matrix m = ecdl::Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        if (data == nullptr) {
            emit(out, std::move(m));
            return;
        }
        for (size_t i = 0; i < rows; ++i) {
            for (size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * cols + j];
        }
        ecdl::require(ecdl::all_finite(m), ecdl::ErrorCode::invalid_argument, "matrix has non-finite entries");
        emit(out, std::move(m));
    });
}

void ecdl_matrix_free(ecdl_matrix* m) { delete m; }

size_t ecdl_matrix_rows(const ecdl_matrix* m) { return m ? static_cast<size_t>(m->value.rows()) : 0; }

size_t ecdl_matrix_cols(const ecdl_matrix* m) { return m ? static_cast<size_t>(m->value.cols()) : 0; }

ecdl_status ecdl_matrix_copy_data(const ecdl_matrix* m, double* dst, size_t capacity)
{
    return guarded([&] {
        need(m, "matrix");
        need(dst, "dst");
        const auto rows = static_cast<size_t>(m->value.rows());
        const auto cols = static_cast<size_t>(m->value.cols());
        ecdl::require(capacity >= rows * cols, ecdl::ErrorCode::dimension_mismatch, "destination buffer too small");
        for (size_t i = 0; i < rows; ++i) {
            for (size_t j = 0; j < cols; ++j) dst[i * cols + j] = m->value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    });
}

ecdl_status ecdl_matrix_load(const char* path, ecdl_matrix** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        emit(out, ecdl::read_mat1(path));
    });
}

ecdl_status ecdl_matrix_save(const ecdl_matrix* m, const char* path)
{
    return guarded([&] {
        need(m, "matrix");
        need(path, "path");
        ecdl::write_mat1(m->value, path);
    });
}

ecdl_status ecdl_pseudo_inverse(const ecdl_matrix* a, ecdl_matrix** out)
{
    return guarded([&] {
        need(a, "matrix");
        need(out, "out");
        emit(out, ecdl::pseudo_inverse(a->value));
    });
}

ecdl_status ecdl_least_squares_dictionary(const ecdl_matrix* y, const ecdl_matrix* x, ecdl_matrix** out, int* degenerate)
{
    return guarded([&] {
        need(y, "samples");
        need(x, "codes");
        need(out, "out");
        auto result = ecdl::least_squares_dictionary(y->value, x->value);
        if (degenerate) *degenerate = result.degenerate ? 1 : 0;
        emit(out, std::move(result.dictionary));
    });
}

ecdl_status ecdl_frobenius_mse(const ecdl_matrix* a, const ecdl_matrix* b, double* out)
{
    return guarded([&] {
        need(a, "a");
        need(b, "b");
        need(out, "out");
        *out = ecdl::frobenius_mse(a->value, b->value);
    });
}

ecdl_status ecdl_image_load(const char* path, ecdl_image** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        emit(out, ecdl::load_pgm(path));
    });
}

ecdl_status ecdl_image_save(const ecdl_image* img, const char* path)
{
    return guarded([&] {
        need(img, "image");
        need(path, "path");
        ecdl::save_pgm(img->value, path);
    });
}

void ecdl_image_free(ecdl_image* img) { delete img; }

size_t ecdl_image_width(const ecdl_image* img) { return img ? img->value.width : 0; }

size_t ecdl_image_height(const ecdl_image* img) { return img ? img->value.height : 0; }

ecdl_status ecdl_extract_patches(const ecdl_image* img, size_t side, size_t stride, ecdl_matrix** out)
{
    return guarded([&] {
        need(img, "image");
        need(out, "out");
        emit(out, ecdl::extract_patches(img->value, side, stride).data);
    });
}

ecdl_status ecdl_assemble_patches(const ecdl_matrix* patches, size_t side, size_t stride, size_t width, size_t height,
                                  ecdl_image** out)
{
    return guarded([&] {
        need(patches, "patches");
        need(out, "out");
        emit(out, ecdl::assemble_patches({patches->value, side, stride, width, height}));
    });
}

ecdl_status ecdl_psnr(double mse, double peak, double* out)
{
    return guarded([&] {
        need(out, "out");
        *out = ecdl::psnr(mse, peak);
    });
}

ecdl_status ecdl_dictionary_dct(size_t patch_side, size_t num_atoms, ecdl_dictionary** out)
{
    return guarded([&] {
        need(out, "out");
        emit(out, ecdl::overcomplete_dct(patch_side, num_atoms));
    });
}

ecdl_status ecdl_dictionary_random(size_t n, size_t num_atoms, uint64_t seed, ecdl_dictionary** out)
{
    return guarded([&] {
        need(out, "out");
        ecdl::Rng rng(seed);
        emit(out, ecdl::random_dictionary(n, num_atoms, rng));
    });
}

ecdl_status ecdl_dictionary_from_matrix(const ecdl_matrix* atoms, ecdl_dictionary** out)
{
    return guarded([&] {
        need(atoms, "atoms");
        need(out, "out");
        emit(out, ecdl::Dictionary::from_matrix(atoms->value));
    });
}

ecdl_status ecdl_dictionary_load(const char* path, ecdl_dictionary** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        emit(out, ecdl::Dictionary::from_matrix(ecdl::read_mat1(path)));
    });
}

ecdl_status ecdl_dictionary_save(const ecdl_dictionary* d, const char* path)
{
    return guarded([&] {
        need(d, "dictionary");
        need(path, "path");
        ecdl::write_mat1(d->value.atoms(), path);
    });
}

ecdl_status ecdl_dictionary_atoms(const ecdl_dictionary* d, ecdl_matrix** out)
{
    return guarded([&] {
        need(d, "dictionary");
        need(out, "out");
        emit(out, ecdl::Matrix(d->value.atoms()));
    });
}

size_t ecdl_dictionary_dim(const ecdl_dictionary* d) { return d ? static_cast<size_t>(d->value.dim()) : 0; }

size_t ecdl_dictionary_size(const ecdl_dictionary* d) { return d ? static_cast<size_t>(d->value.size()) : 0; }

void ecdl_dictionary_free(ecdl_dictionary* d) { delete d; }

ecdl_status ecdl_dictionary_mosaic(const ecdl_dictionary* d, const char* path)
{
    return guarded([&] {
        need(d, "dictionary");
        need(path, "path");
        ecdl::export_dictionary_mosaic(d->value, path);
    });
}

ecdl_status ecdl_encode(const ecdl_dictionary* d, const ecdl_matrix* samples, size_t k, double omp_tol, unsigned threads,
                        ecdl_matrix** codes)
{
    return guarded([&] {
        need(d, "dictionary");
        need(samples, "samples");
        need(codes, "codes");
        emit(codes, ecdl::omp_encode_batch(d->value, samples->value, k, omp_tol, threads == 0 ? 1 : threads).dense());
    });
}

ecdl_status ecdl_evaluate(const ecdl_dictionary* d, const ecdl_matrix* samples, const size_t* k_list, size_t count,
                          double omp_tol, unsigned threads, double* psnr_db, double* mse)
{
    return guarded([&] {
        need(d, "dictionary");
        need(samples, "samples");
        need(k_list, "k_list");
        const auto rows = ecdl::evaluate_dictionary(d->value, samples->value, std::vector<std::size_t>(k_list, k_list + count),
                                                    omp_tol, threads == 0 ? 1 : threads);
        for (size_t i = 0; i < rows.size(); ++i) {
            if (psnr_db) psnr_db[i] = rows[i].psnr_db;
            if (mse) mse[i] = rows[i].mse;
        }
    });
}

ecdl_status ecdl_train(const ecdl_learn_config* config, const ecdl_matrix* samples, const ecdl_dictionary* initial,
                       ecdl_dictionary** out, ecdl_trace** trace)
{
    return guarded([&] {
        need(config, "config");
        need(samples, "samples");
        need(initial, "initial");
        need(out, "out");
        try {
            auto result = ecdl::train(to_cpp(*config), samples->value, initial->value);
            emit(out, std::move(result.dictionary));
            if (trace) emit(trace, std::move(result.trace));
        } catch (const ecdl::TrainError& e) {
            if (trace) emit(trace, e.partial_trace());
            throw;
        }
    });
}

size_t ecdl_trace_length(const ecdl_trace* t) { return t ? t->value.records.size() : 0; }

ecdl_status ecdl_trace_record(const ecdl_trace* t, size_t index, double* mse, double* psnr_db, double* mean_support,
                              size_t* atoms_repaired)
{
    return guarded([&] {
        need(t, "trace");
        ecdl::require(index < t->value.records.size(), ecdl::ErrorCode::invalid_argument, "trace index out of range");
        const auto& r = t->value.records[index];
        if (mse) *mse = r.mse;
        if (psnr_db) *psnr_db = r.psnr_db;
        if (mean_support) *mean_support = r.mean_support;
        if (atoms_repaired) *atoms_repaired = r.atoms_repaired;
    });
}

ecdl_status ecdl_trace_save_csv(const ecdl_trace* t, const char* path, int with_seconds)
{
    return guarded([&] {
        need(t, "trace");
        need(path, "path");
        const std::string csv = ecdl::trace_csv(t->value, with_seconds != 0);
        std::FILE* f = std::fopen(path, "wb");
        ecdl::require(f != nullptr, ecdl::ErrorCode::io, std::string("cannot open ") + path + " for writing");
        const bool ok = std::fwrite(csv.data(), 1, csv.size(), f) == csv.size();
        const bool closed = std::fclose(f) == 0;
        ecdl::require(ok && closed, ecdl::ErrorCode::io, std::string("write failed: ") + path);
    });
}

void ecdl_trace_free(ecdl_trace* t) { delete t; }

ecdl_status ecdl_experiment_validate(const ecdl_experiment_spec* spec)
{
    return guarded([&] {
        need(spec, "spec");
        to_cpp(*spec).validate();
    });
}

ecdl_status ecdl_run_experiment(const ecdl_experiment_spec* spec)
{
    return guarded([&] {
        need(spec, "spec");
        ecdl::run_experiment(to_cpp(*spec));
    });
}

}  // extern "C"
