#include "deepkm/deepkm.h"

#include "core/config.hpp"
#include "core/runner.hpp"

#include <cstring>
#include <string>

struct dkm_config_t {
    dkm::ExperimentConfig config;
};

struct dkm_dataset_t {
    dkm::LabeledDataset dataset;
};

namespace {

thread_local std::string g_last_error;

dkm_status record_error(dkm_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

/// Runs the body, translating the core exception hierarchy to status codes.
template <typename Fn>
dkm_status guarded(Fn&& fn) {
    try {
        fn();
        return DKM_OK;
    } catch (const dkm::InvalidArgument& e) {
        return record_error(DKM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const dkm::FormatError& e) {
        return record_error(DKM_ERR_FORMAT, e.what());
    } catch (const dkm::IoError& e) {
        return record_error(DKM_ERR_IO, e.what());
    } catch (const dkm::NumericError& e) {
        return record_error(DKM_ERR_NUMERIC, e.what());
    } catch (const dkm::ContractViolation& e) {
        return record_error(DKM_ERR_CONTRACT, e.what());
    } catch (const dkm::DegenerateInput& e) {
        return record_error(DKM_ERR_DEGENERATE, e.what());
    } catch (const std::exception& e) {
        return record_error(DKM_ERR_UNKNOWN, e.what());
    } catch (...) {
        return record_error(DKM_ERR_UNKNOWN, "unknown error");
    }
}

dkm_status require(bool condition, const char* message) {
    if (condition) return DKM_OK;
    return record_error(DKM_ERR_INVALID_ARGUMENT, message);
}

void copy_string(const std::string& value, char* buf, size_t buf_len) {
    if (buf_len == 0) return;
    const size_t n = std::min(buf_len - 1, value.size());
    std::memcpy(buf, value.data(), n);
    buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* dkm_status_name(dkm_status status) {
    switch (status) {
        case DKM_OK: return "ok";
        case DKM_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case DKM_ERR_FORMAT: return "format_error";
        case DKM_ERR_IO: return "io_error";
        case DKM_ERR_NUMERIC: return "numeric_error";
        case DKM_ERR_CONTRACT: return "contract_violation";
        case DKM_ERR_DEGENERATE: return "degenerate_input";
        case DKM_ERR_UNKNOWN: return "unknown_error";
    }
    return "unknown_status";
}

const char* dkm_last_error(void) {
    return g_last_error.c_str();
}

dkm_status dkm_config_create(dkm_config_t** out) {
    if (dkm_status s = require(out != nullptr, "dkm_config_create: out is null")) return s;
    *out = new dkm_config_t{};
    return DKM_OK;
}

dkm_status dkm_config_load(const char* path, dkm_config_t** out) {
    if (dkm_status s = require(path && out, "dkm_config_load: null argument")) return s;
    return guarded([&] { *out = new dkm_config_t{dkm::ExperimentConfig::from_file(path)}; });
}

dkm_status dkm_config_set(dkm_config_t* config, const char* key, const char* value) {
    if (dkm_status s = require(config && key && value, "dkm_config_set: null argument")) return s;
    return guarded([&] { config->config.apply(key, value); });
}

dkm_status dkm_config_get(const dkm_config_t* config, const char* key, char* buf, size_t buf_len) {
    if (dkm_status s = require(config && key && buf, "dkm_config_get: null argument")) return s;
    return guarded([&] {
        const auto entries = config->config.to_map();
        const auto it = entries.find(key);
        if (it == entries.end()) {
            throw dkm::InvalidArgument(std::string("config field '") + key + "': unknown key");
        }
        copy_string(it->second, buf, buf_len);
    });
}

dkm_status dkm_config_validate(const dkm_config_t* config) {
    if (dkm_status s = require(config != nullptr, "dkm_config_validate: config is null")) return s;
    return guarded([&] { config->config.validate_for_training(); });
}

void dkm_config_free(dkm_config_t* config) {
    delete config;
}

dkm_status dkm_dataset_open(const dkm_config_t* config, dkm_dataset_t** out) {
    if (dkm_status s = require(config && out, "dkm_dataset_open: null argument")) return s;
    return guarded([&] { *out = new dkm_dataset_t{dkm::open_dataset(config->config)}; });
}

dkm_status dkm_dataset_dims(const dkm_dataset_t* dataset, int64_t* n, int64_t* dim) {
    if (dkm_status s = require(dataset != nullptr, "dkm_dataset_dims: dataset is null")) return s;
    if (n) *n = static_cast<int64_t>(dataset->dataset.n());
    if (dim) *dim = static_cast<int64_t>(dataset->dataset.dim());
    return DKM_OK;
}

dkm_status dkm_dataset_fingerprint(const dkm_dataset_t* dataset, char* buf, size_t buf_len) {
    if (dkm_status s = require(dataset && buf, "dkm_dataset_fingerprint: null argument")) return s;
    return guarded([&] { copy_string(dataset->dataset.fingerprint(), buf, buf_len); });
}

dkm_status dkm_dataset_save_csv(const dkm_dataset_t* dataset, const char* path, int with_labels) {
    if (dkm_status s = require(dataset && path, "dkm_dataset_save_csv: null argument")) return s;
    return guarded([&] { dkm::save_dense_csv(path, dataset->dataset, with_labels != 0); });
}

void dkm_dataset_free(dkm_dataset_t* dataset) {
    delete dataset;
}

dkm_status dkm_run_pretrain(const dkm_config_t* config, const dkm_dataset_t* dataset,
                            const char* out_dir) {
    if (dkm_status s = require(config && dataset && out_dir, "dkm_run_pretrain: null argument")) {
        return s;
    }
    return guarded([&] { dkm::cmd_pretrain(config->config, dataset->dataset, out_dir); });
}

dkm_status dkm_run_train(const dkm_config_t* config, const dkm_dataset_t* dataset,
                         const char* out_dir) {
    if (dkm_status s = require(config && dataset && out_dir, "dkm_run_train: null argument")) {
        return s;
    }
    return guarded([&] { dkm::cmd_train(config->config, dataset->dataset, out_dir); });
}

dkm_status dkm_run_evaluate(const char* const* run_dirs, size_t n_dirs, const char* labels_path,
                            int test_only, const char* out_dir) {
    if (dkm_status s = require(run_dirs && labels_path && out_dir && n_dirs > 0,
                               "dkm_run_evaluate: null or empty argument")) {
        return s;
    }
    return guarded([&] {
        std::vector<std::string> dirs(run_dirs, run_dirs + n_dirs);
        dkm::cmd_evaluate(dirs, labels_path,
                          test_only ? dkm::EvalSplit::test_only : dkm::EvalSplit::full, out_dir);
    });
}

dkm_status dkm_run_linesearch(const dkm_config_t* config, const dkm_dataset_t* dataset,
                              const double* grid, size_t grid_len, const char* out_dir,
                              double* best_lambda) {
    if (dkm_status s = require(config && dataset && grid && out_dir && grid_len > 0,
                               "dkm_run_linesearch: null or empty argument")) {
        return s;
    }
    return guarded([&] {
        const std::vector<double> lambdas(grid, grid + grid_len);
        const dkm::LineSearchResult result =
            dkm::cmd_linesearch(config->config, dataset->dataset, lambdas, out_dir);
        if (best_lambda) *best_lambda = result.best_lambda;
    });
}

dkm_status dkm_make_blobs_csv(const dkm_config_t* config, const char* csv_path) {
    if (dkm_status s = require(config && csv_path, "dkm_make_blobs_csv: null argument")) return s;
    return guarded([&] { dkm::cmd_blobs(config->config, csv_path); });
}

}  // extern "C"
