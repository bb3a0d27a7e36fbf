/* C interface to the ecdl dictionary-learning library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an ecdl_status;
 * on failure ecdl_last_error() describes the problem (per thread, valid
 * until the next failing call on that thread). Output handles are only
 * written on success.
 */
#ifndef ECDL_H
#define ECDL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ECDL_API __declspec(dllexport)
#else
#define ECDL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ecdl_status {
    ECDL_OK = 0,
    ECDL_ERR_INVALID_ARGUMENT = 1,
    ECDL_ERR_DIMENSION = 2,
    ECDL_ERR_IO = 3,
    ECDL_ERR_UNSUPPORTED_FORMAT = 4,
    ECDL_ERR_MALFORMED_HEADER = 5,
    ECDL_ERR_UNSUPPORTED_MAXVAL = 6,
    ECDL_ERR_TRUNCATED = 7,
    ECDL_ERR_NUMERIC = 8,
    ECDL_ERR_DEGENERATE = 9,
    ECDL_ERR_COVERAGE_GAP = 10,
    ECDL_ERR_INTERNAL = 99
} ecdl_status;

typedef enum ecdl_algorithm { ECDL_ALGO_MOD = 0, ECDL_ALGO_ECMOD = 1, ECDL_ALGO_ECMODPLUS = 2 } ecdl_algorithm;

typedef enum ecdl_init_mode { ECDL_INIT_DCT = 0, ECDL_INIT_RANDOM = 1, ECDL_INIT_LOADED = 2 } ecdl_init_mode;

typedef struct ecdl_matrix ecdl_matrix;
typedef struct ecdl_image ecdl_image;
typedef struct ecdl_dictionary ecdl_dictionary;
typedef struct ecdl_trace ecdl_trace;

typedef struct ecdl_learn_config {
    ecdl_algorithm algo;
    size_t k;
    size_t m;
    size_t max_iters;
    double omp_tol;
    double stop_delta;
    uint64_t seed;
    ecdl_init_mode init;
    unsigned threads;
} ecdl_learn_config;

typedef struct ecdl_experiment_spec {
    const char* image_path;
    size_t patch_size;
    size_t stride;
    size_t atoms;
    const ecdl_algorithm* algos; /* learn.algo is ignored */
    size_t num_algos;
    ecdl_learn_config learn;
    const size_t* test_k;
    size_t num_test_k;
    const uint64_t* seeds;
    size_t num_seeds;
    const char* out_dir;
    int timings;
} ecdl_experiment_spec;

ECDL_API const char* ecdl_version(void);
ECDL_API const char* ecdl_last_error(void);
ECDL_API const char* ecdl_status_name(ecdl_status status);

/* Defaults: mod, k=8, m=4, 40 iterations, omp_tol=1e-9, stop_delta=1e-6, dct init. */
ECDL_API void ecdl_learn_config_default(ecdl_learn_config* config);
ECDL_API ecdl_status ecdl_learn_config_validate(const ecdl_learn_config* config);

/* Matrices. `data` is row-major, rows*cols doubles; NULL gives a zero matrix. */
ECDL_API ecdl_status ecdl_matrix_create(size_t rows, size_t cols, const double* data, ecdl_matrix** out);
ECDL_API void ecdl_matrix_free(ecdl_matrix* m);
ECDL_API size_t ecdl_matrix_rows(const ecdl_matrix* m);
ECDL_API size_t ecdl_matrix_cols(const ecdl_matrix* m);
ECDL_API ecdl_status ecdl_matrix_copy_data(const ecdl_matrix* m, double* dst, size_t capacity);
ECDL_API ecdl_status ecdl_matrix_load(const char* path, ecdl_matrix** out);
ECDL_API ecdl_status ecdl_matrix_save(const ecdl_matrix* m, const char* path);
ECDL_API ecdl_status ecdl_pseudo_inverse(const ecdl_matrix* a, ecdl_matrix** out);
/* D = Y X^+; *degenerate is set when X is all zero (may be NULL). */
ECDL_API ecdl_status ecdl_least_squares_dictionary(const ecdl_matrix* y, const ecdl_matrix* x, ecdl_matrix** out,
                                                   int* degenerate);
ECDL_API ecdl_status ecdl_frobenius_mse(const ecdl_matrix* a, const ecdl_matrix* b, double* out);

/* Images (binary 8-bit PGM). */
ECDL_API ecdl_status ecdl_image_load(const char* path, ecdl_image** out);
ECDL_API ecdl_status ecdl_image_save(const ecdl_image* img, const char* path);
ECDL_API void ecdl_image_free(ecdl_image* img);
ECDL_API size_t ecdl_image_width(const ecdl_image* img);
ECDL_API size_t ecdl_image_height(const ecdl_image* img);
ECDL_API ecdl_status ecdl_extract_patches(const ecdl_image* img, size_t side, size_t stride, ecdl_matrix** out);
ECDL_API ecdl_status ecdl_assemble_patches(const ecdl_matrix* patches, size_t side, size_t stride, size_t width,
                                           size_t height, ecdl_image** out);
ECDL_API ecdl_status ecdl_psnr(double mse, double peak, double* out);

/* Dictionaries. Columns are atoms and are unit-normalized on construction. */
ECDL_API ecdl_status ecdl_dictionary_dct(size_t patch_side, size_t num_atoms, ecdl_dictionary** out);
ECDL_API ecdl_status ecdl_dictionary_random(size_t n, size_t num_atoms, uint64_t seed, ecdl_dictionary** out);
ECDL_API ecdl_status ecdl_dictionary_from_matrix(const ecdl_matrix* atoms, ecdl_dictionary** out);
ECDL_API ecdl_status ecdl_dictionary_load(const char* path, ecdl_dictionary** out);
ECDL_API ecdl_status ecdl_dictionary_save(const ecdl_dictionary* d, const char* path);
ECDL_API ecdl_status ecdl_dictionary_atoms(const ecdl_dictionary* d, ecdl_matrix** out);
ECDL_API size_t ecdl_dictionary_dim(const ecdl_dictionary* d);
ECDL_API size_t ecdl_dictionary_size(const ecdl_dictionary* d);
ECDL_API void ecdl_dictionary_free(ecdl_dictionary* d);
ECDL_API ecdl_status ecdl_dictionary_mosaic(const ecdl_dictionary* d, const char* path);

/* OMP coding of every column of `samples`; result is the dense K x M code matrix. */
ECDL_API ecdl_status ecdl_encode(const ecdl_dictionary* d, const ecdl_matrix* samples, size_t k, double omp_tol,
                                 unsigned threads, ecdl_matrix** codes);

/* One row per k: writes psnr_db[i] and mse[i] (either may be NULL). */
ECDL_API ecdl_status ecdl_evaluate(const ecdl_dictionary* d, const ecdl_matrix* samples, const size_t* k_list,
                                   size_t count, double omp_tol, unsigned threads, double* psnr_db, double* mse);

ECDL_API ecdl_status ecdl_train(const ecdl_learn_config* config, const ecdl_matrix* samples,
                                const ecdl_dictionary* initial, ecdl_dictionary** out, ecdl_trace** trace);
ECDL_API size_t ecdl_trace_length(const ecdl_trace* t);
ECDL_API ecdl_status ecdl_trace_record(const ecdl_trace* t, size_t index, double* mse, double* psnr_db,
                                       double* mean_support, size_t* atoms_repaired);
ECDL_API ecdl_status ecdl_trace_save_csv(const ecdl_trace* t, const char* path, int with_seconds);
ECDL_API void ecdl_trace_free(ecdl_trace* t);

ECDL_API ecdl_status ecdl_experiment_validate(const ecdl_experiment_spec* spec);
ECDL_API ecdl_status ecdl_run_experiment(const ecdl_experiment_spec* spec);

#ifdef __cplusplus
}
#endif

#endif /* ECDL_H */
