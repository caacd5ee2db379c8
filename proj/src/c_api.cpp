#include "halfkfn/halfkfn.h"

#include "halfkfn/error.hpp"
#include "halfkfn/harness.hpp"
#include "halfkfn/rng.hpp"

#include <atomic>
#include <cstdio>
#include <memory>
#include <cstring>
#include <string>

struct hkfn_sample_set {
    halfkfn::SampleSet set;
};

struct hkfn_report {
    halfkfn::TestReport report;
};

struct hkfn_experiment {
    halfkfn::ExperimentConfig config;
};

struct hkfn_power_report {
    halfkfn::PowerReport report;
};

namespace {

thread_local std::string last_error;
std::atomic<bool> quiet{false};

hkfn_status to_status(halfkfn::ErrorCode code) {
    using halfkfn::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidInput: return HKFN_ERROR_INVALID_INPUT;
        case ErrorCode::DegenerateLabels: return HKFN_ERROR_DEGENERATE_LABELS;
        case ErrorCode::Parse: return HKFN_ERROR_PARSE;
        case ErrorCode::Io: return HKFN_ERROR_IO;
        case ErrorCode::DegenerateClass: return HKFN_ERROR_DEGENERATE_CLASS;
        case ErrorCode::DegenerateVariance: return HKFN_ERROR_DEGENERATE_VARIANCE;
        case ErrorCode::DegenerateBandwidth: return HKFN_ERROR_DEGENERATE_BANDWIDTH;
        case ErrorCode::UnsupportedSize: return HKFN_ERROR_UNSUPPORTED_SIZE;
        case ErrorCode::Config: return HKFN_ERROR_CONFIG;
    }
    return HKFN_ERROR_INTERNAL;
}

hkfn_status fail(hkfn_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

// Runs `f`, translating exceptions into status codes.
template <typename F>
hkfn_status guarded(F&& f) {
    try {
        f();
        return HKFN_OK;
    } catch (const halfkfn::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(HKFN_ERROR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(HKFN_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(HKFN_ERROR_INTERNAL, "unknown error");
    }
}

hkfn_status null_argument(const char* what) {
    return fail(HKFN_ERROR_INVALID_ARGUMENT, std::string(what) + " must not be null");
}

void install_warning_handler() {
    static const bool once = [] {
        halfkfn::set_warning_handler([](const std::string& msg) {
            if (!quiet.load()) std::fprintf(stderr, "halfkfn: warning: %s\n", msg.c_str());
        });
        return true;
    }();
    (void)once;
}

}  // namespace

extern "C" {

const char* hkfn_status_string(hkfn_status status) {
    switch (status) {
        case HKFN_OK: return "ok";
        case HKFN_ERROR_INVALID_ARGUMENT: return "invalid argument";
        case HKFN_ERROR_INVALID_INPUT: return "invalid input";
        case HKFN_ERROR_DEGENERATE_LABELS: return "degenerate labels";
        case HKFN_ERROR_PARSE: return "parse error";
        case HKFN_ERROR_IO: return "i/o error";
        case HKFN_ERROR_DEGENERATE_CLASS: return "degenerate class";
        case HKFN_ERROR_DEGENERATE_VARIANCE: return "degenerate variance";
        case HKFN_ERROR_DEGENERATE_BANDWIDTH: return "degenerate bandwidth";
        case HKFN_ERROR_UNSUPPORTED_SIZE: return "unsupported size";
        case HKFN_ERROR_CONFIG: return "configuration error";
        case HKFN_ERROR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* hkfn_last_error(void) { return last_error.c_str(); }

void hkfn_set_quiet(int q) {
    install_warning_handler();
    quiet.store(q != 0);
}

void hkfn_string_free(char* s) { delete[] s; }

hkfn_status hkfn_sample_set_load_csv(const char* path, hkfn_sample_set** out) {
    if (!path) return null_argument("path");
    if (!out) return null_argument("out");
    return guarded([&] { *out = new hkfn_sample_set{halfkfn::load_softmax_vectors(path)}; });
}

hkfn_status hkfn_sample_set_create(const double* values, size_t rows, size_t dim, hkfn_sample_set** out) {
    if (!values) return null_argument("values");
    if (!out) return null_argument("out");
    return guarded([&] {
        *out = new hkfn_sample_set{halfkfn::SampleSet(dim, std::vector<double>(values, values + rows * dim))};
    });
}

hkfn_status hkfn_sample_set_save_csv(const hkfn_sample_set* set, const char* path) {
    if (!set) return null_argument("set");
    if (!path) return null_argument("path");
    return guarded([&] { halfkfn::save_softmax_vectors(set->set, path); });
}

size_t hkfn_sample_set_rows(const hkfn_sample_set* set) { return set ? set->set.size() : 0; }
size_t hkfn_sample_set_dim(const hkfn_sample_set* set) { return set ? set->set.dim() : 0; }
void hkfn_sample_set_destroy(hkfn_sample_set* set) { delete set; }

void hkfn_detect_options_init(hkfn_detect_options* o) {
    if (!o) return;
    const halfkfn::DetectOptions d;
    o->method = "half_kfn_bootstrap";
    o->k = d.k;
    o->permutations = d.permutations;
    o->resamples = d.resamples;
    o->alpha = d.alpha;
    o->sigma_noise = d.sigma_noise;
    o->seed = d.seed;
    o->one_sided = 0;
}

hkfn_status hkfn_detect(const hkfn_sample_set* source, const hkfn_sample_set* target,
                        const hkfn_detect_options* options, hkfn_report** out) {
    if (!source) return null_argument("source");
    if (!target) return null_argument("target");
    if (!options) return null_argument("options");
    if (!out) return null_argument("out");
    install_warning_handler();
    return guarded([&] {
        halfkfn::DetectOptions d;
        d.k = options->k;
        d.permutations = options->permutations;
        d.resamples = options->resamples;
        d.alpha = options->alpha;
        d.sigma_noise = options->sigma_noise;
        d.seed = options->seed;
        d.sidedness = options->one_sided ? halfkfn::Sidedness::OneSided : halfkfn::Sidedness::TwoSided;
        d.baseline.knn_k = options->k;
        const auto method = halfkfn::parse_method(options->method ? options->method : "half_kfn_bootstrap");
        const auto src = source->set.with_origin(halfkfn::Origin::Source);
        const auto tgt = target->set.with_origin(halfkfn::Origin::Target);
        *out = new hkfn_report{halfkfn::run_method(method, src, tgt, d)};
    });
}

int hkfn_report_is_drift(const hkfn_report* r) { return r && r->report.drift() ? 1 : 0; }
double hkfn_report_statistic(const hkfn_report* r) { return r ? r->report.statistic : 0.0; }
double hkfn_report_p_value(const hkfn_report* r) { return r ? r->report.p_value : 1.0; }

int hkfn_report_z_score(const hkfn_report* r, double* z) {
    if (!r || !r->report.z_score) return 0;
    if (z) *z = *r->report.z_score;
    return 1;
}

hkfn_status hkfn_report_to_json(const hkfn_report* r, char** json) {
    if (!r) return null_argument("report");
    if (!json) return null_argument("json");
    return guarded([&] {
        const std::string text = halfkfn::to_json(r->report).dump(2);
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *json = buf;
    });
}

hkfn_status hkfn_report_write_json(const hkfn_report* r, const char* path) {
    if (!r) return null_argument("report");
    if (!path) return null_argument("path");
    return guarded([&] { halfkfn::write_text_file(path, halfkfn::to_json(r->report).dump(2) + "\n"); });
}

void hkfn_report_destroy(hkfn_report* r) { delete r; }

void hkfn_simulate_options_init(hkfn_simulate_options* o) {
    if (!o) return;
    const halfkfn::ExperimentConfig d;
    o->seed = 0;
    o->n1 = 500;
    o->n2 = 500;
    o->delta = 0.0;
    o->sigma_gn = d.sigma_gn;
    o->reducer_iterations = d.reducer_iterations;
    o->learning_rate = d.learning_rate;
}

hkfn_status hkfn_simulate(const hkfn_simulate_options* o, hkfn_sample_set** source, hkfn_sample_set** target) {
    if (!o) return null_argument("options");
    if (!source || !target) return null_argument("output handle");
    install_warning_handler();
    return guarded([&] {
        if (o->n1 == 0 || o->n2 == 0)
            throw halfkfn::Error(halfkfn::ErrorCode::InvalidInput, "n1 and n2 must be positive");
        const auto model = halfkfn::train_simulated_reducer(halfkfn::derive_seed(o->seed, 0), o->reducer_iterations,
                                                            o->learning_rate);
        auto pair = halfkfn::simulate_pair(model, halfkfn::derive_seed(o->seed, 1), o->n1, o->n2, o->delta,
                                           o->sigma_gn);
        auto src = std::make_unique<hkfn_sample_set>(hkfn_sample_set{std::move(pair.source)});
        auto tgt = std::make_unique<hkfn_sample_set>(hkfn_sample_set{std::move(pair.target)});
        *source = src.release();
        *target = tgt.release();
    });
}

hkfn_status hkfn_experiment_create(int default_sweep, hkfn_experiment** out) {
    if (!out) return null_argument("out");
    return guarded([&] {
        *out = new hkfn_experiment{default_sweep ? halfkfn::ExperimentConfig::default_sweep()
                                                 : halfkfn::ExperimentConfig{}};
    });
}

hkfn_status hkfn_experiment_set(hkfn_experiment* exp, const char* key, const char* value) {
    if (!exp) return null_argument("experiment");
    if (!key || !value) return null_argument("key/value");
    return guarded([&] { halfkfn::apply_setting(exp->config, key, value); });
}

hkfn_status hkfn_experiment_load_file(hkfn_experiment* exp, const char* path) {
    if (!exp) return null_argument("experiment");
    if (!path) return null_argument("path");
    return guarded([&] { exp->config = halfkfn::load_experiment_config(path, exp->config); });
}

void hkfn_experiment_destroy(hkfn_experiment* exp) { delete exp; }

hkfn_status hkfn_run_power_study(const hkfn_experiment* exp, hkfn_power_report** out) {
    if (!exp) return null_argument("experiment");
    if (!out) return null_argument("out");
    install_warning_handler();
    return guarded([&] { *out = new hkfn_power_report{halfkfn::run_power_study(exp->config)}; });
}

hkfn_status hkfn_run_timing_benchmark(const hkfn_experiment* exp, hkfn_power_report** out) {
    if (!exp) return null_argument("experiment");
    if (!out) return null_argument("out");
    install_warning_handler();
    return guarded([&] { *out = new hkfn_power_report{halfkfn::run_timing_benchmark(exp->config)}; });
}

size_t hkfn_power_report_cell_count(const hkfn_power_report* r) { return r ? r->report.cells.size() : 0; }

hkfn_status hkfn_power_report_write_csv(const hkfn_power_report* r, const char* path) {
    if (!r) return null_argument("report");
    if (!path) return null_argument("path");
    return guarded([&] { halfkfn::write_text_file(path, halfkfn::power_report_csv(r->report)); });
}

hkfn_status hkfn_power_report_write_json(const hkfn_power_report* r, const char* path) {
    if (!r) return null_argument("report");
    if (!path) return null_argument("path");
    return guarded([&] { halfkfn::write_text_file(path, halfkfn::to_json(r->report).dump(2) + "\n"); });
}

hkfn_status hkfn_power_report_write_ratio_csv(const hkfn_power_report* r, const char* path) {
    if (!r) return null_argument("report");
    if (!path) return null_argument("path");
    return guarded([&] { halfkfn::write_text_file(path, halfkfn::timing_ratio_csv(r->report)); });
}

void hkfn_power_report_destroy(hkfn_power_report* r) { delete r; }

}  // extern "C"
