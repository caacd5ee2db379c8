/*
 * halfkfn.h - C interface to the Half-KFN drift detection library.
 *
 * Objects are opaque handles created by hkfn_*_create / load / run calls and
 * released with the matching hkfn_*_destroy. Every fallible call returns an
 * hkfn_status; on failure a description of the error is available from
 * hkfn_last_error() on the calling thread until its next failing call.
 */
#ifndef HALFKFN_H
#define HALFKFN_H

#include <stddef.h>
#include <stdint.h>

#if defined(HKFN_BUILDING_LIBRARY)
#define HKFN_API __attribute__((visibility("default")))
#else
#define HKFN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hkfn_status {
    HKFN_OK = 0,
    HKFN_ERROR_INVALID_ARGUMENT = 1, /* null pointer or out-of-range option */
    HKFN_ERROR_INVALID_INPUT = 2,
    HKFN_ERROR_DEGENERATE_LABELS = 3,
    HKFN_ERROR_PARSE = 4,
    HKFN_ERROR_IO = 5,
    HKFN_ERROR_DEGENERATE_CLASS = 6,
    HKFN_ERROR_DEGENERATE_VARIANCE = 7,
    HKFN_ERROR_DEGENERATE_BANDWIDTH = 8,
    HKFN_ERROR_UNSUPPORTED_SIZE = 9,
    HKFN_ERROR_CONFIG = 10,
    HKFN_ERROR_INTERNAL = 11
} hkfn_status;

typedef struct hkfn_sample_set hkfn_sample_set;
typedef struct hkfn_report hkfn_report;
typedef struct hkfn_experiment hkfn_experiment;
typedef struct hkfn_power_report hkfn_power_report;

HKFN_API const char* hkfn_status_string(hkfn_status status);
HKFN_API const char* hkfn_last_error(void);

/* Non-zero silences library warnings (they go to stderr by default). */
HKFN_API void hkfn_set_quiet(int quiet);

/* Frees strings returned by the library. */
HKFN_API void hkfn_string_free(char* s);

/* ---- sample sets -------------------------------------------------------- */

HKFN_API hkfn_status hkfn_sample_set_load_csv(const char* path, hkfn_sample_set** out);
/* `values` is rows x dim, row-major; every row must be a probability vector. */
HKFN_API hkfn_status hkfn_sample_set_create(const double* values, size_t rows, size_t dim,
                                            hkfn_sample_set** out);
HKFN_API hkfn_status hkfn_sample_set_save_csv(const hkfn_sample_set* set, const char* path);
HKFN_API size_t hkfn_sample_set_rows(const hkfn_sample_set* set);
HKFN_API size_t hkfn_sample_set_dim(const hkfn_sample_set* set);
HKFN_API void hkfn_sample_set_destroy(hkfn_sample_set* set);

/* ---- detection ---------------------------------------------------------- */

typedef struct hkfn_detect_options {
    const char* method; /* half_kfn_bootstrap, half_kfn_permutation, mmd, energy, fr, knn */
    size_t k;
    size_t permutations;
    size_t resamples;
    double alpha;
    double sigma_noise;
    uint64_t seed;
    int one_sided; /* bootstrap only */
} hkfn_detect_options;

/* Defaults: half_kfn_bootstrap, k=1, P=100, M=10, alpha=0.05, noise 1e-8, seed 0. */
HKFN_API void hkfn_detect_options_init(hkfn_detect_options* options);

HKFN_API hkfn_status hkfn_detect(const hkfn_sample_set* source, const hkfn_sample_set* target,
                                 const hkfn_detect_options* options, hkfn_report** out);

HKFN_API int hkfn_report_is_drift(const hkfn_report* report);
HKFN_API double hkfn_report_statistic(const hkfn_report* report);
HKFN_API double hkfn_report_p_value(const hkfn_report* report);
/* Returns 1 and stores the z-score if the method produces one, else 0. */
HKFN_API int hkfn_report_z_score(const hkfn_report* report, double* z);
/* Caller frees *json with hkfn_string_free. */
HKFN_API hkfn_status hkfn_report_to_json(const hkfn_report* report, char** json);
HKFN_API hkfn_status hkfn_report_write_json(const hkfn_report* report, const char* path);
HKFN_API void hkfn_report_destroy(hkfn_report* report);

/* ---- simulated pipeline ------------------------------------------------- */

typedef struct hkfn_simulate_options {
    uint64_t seed;
    size_t n1;
    size_t n2;
    double delta;
    double sigma_gn;
    int reducer_iterations;
    double learning_rate;
} hkfn_simulate_options;

HKFN_API void hkfn_simulate_options_init(hkfn_simulate_options* options);

/* Trains the reducer, draws a control/candidate split, injects drift into the
 * candidate and returns both reduced sets. */
HKFN_API hkfn_status hkfn_simulate(const hkfn_simulate_options* options, hkfn_sample_set** source,
                                   hkfn_sample_set** target);

/* ---- studies ------------------------------------------------------------ */

/* default_sweep != 0 starts from the full sweep (4 sizes x 3 deltas). */
HKFN_API hkfn_status hkfn_experiment_create(int default_sweep, hkfn_experiment** out);
HKFN_API hkfn_status hkfn_experiment_set(hkfn_experiment* exp, const char* key, const char* value);
HKFN_API hkfn_status hkfn_experiment_load_file(hkfn_experiment* exp, const char* path);
HKFN_API void hkfn_experiment_destroy(hkfn_experiment* exp);

HKFN_API hkfn_status hkfn_run_power_study(const hkfn_experiment* exp, hkfn_power_report** out);
HKFN_API hkfn_status hkfn_run_timing_benchmark(const hkfn_experiment* exp, hkfn_power_report** out);

HKFN_API size_t hkfn_power_report_cell_count(const hkfn_power_report* report);
HKFN_API hkfn_status hkfn_power_report_write_csv(const hkfn_power_report* report, const char* path);
HKFN_API hkfn_status hkfn_power_report_write_json(const hkfn_power_report* report, const char* path);
/* Timing ratios (permutation / bootstrap); empty table unless benchmarked. */
HKFN_API hkfn_status hkfn_power_report_write_ratio_csv(const hkfn_power_report* report, const char* path);
HKFN_API void hkfn_power_report_destroy(hkfn_power_report* report);

#ifdef __cplusplus
}
#endif

#endif /* HALFKFN_H */
