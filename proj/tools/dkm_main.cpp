// Command-line front end for the Deep k-Means library. Links the C API only.
#include <deepkm/deepkm.h>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

int exit_code_for(dkm_status status) {
    switch (status) {
        case DKM_OK:
            return 0;
        case DKM_ERR_INVALID_ARGUMENT:
            return 2;  // config error
        case DKM_ERR_NUMERIC:
        case DKM_ERR_CONTRACT:
        case DKM_ERR_DEGENERATE:
            return 3;  // runtime numeric failure
        case DKM_ERR_FORMAT:
        case DKM_ERR_IO:
            return 4;  // I/O error
        default:
            return 1;
    }
}

int fail(dkm_status status) {
    std::fprintf(stderr, "dkm: %s: %s\n", dkm_status_name(status), dkm_last_error());
    return exit_code_for(status);
}

struct ConfigHandle {
    dkm_config_t* ptr = nullptr;
    ~ConfigHandle() { dkm_config_free(ptr); }
};

struct DatasetHandle {
    dkm_dataset_t* ptr = nullptr;
    ~DatasetHandle() { dkm_dataset_free(ptr); }
};

dkm_status build_config(const std::string& config_path, const std::vector<std::string>& overrides,
                        ConfigHandle& out) {
    dkm_status status = config_path.empty() ? dkm_config_create(&out.ptr)
                                            : dkm_config_load(config_path.c_str(), &out.ptr);
    if (status != DKM_OK) return status;
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "dkm: --set expects key=value, got '%s'\n", kv.c_str());
            return DKM_ERR_INVALID_ARGUMENT;
        }
        status = dkm_config_set(out.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (status != DKM_OK) return status;
    }
    return DKM_OK;
}

std::string resolve_out_dir(const ConfigHandle& config, const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    char buf[4096] = {0};
    if (dkm_config_get(config.ptr, "output.dir", buf, sizeof(buf)) == DKM_OK && buf[0]) {
        return buf;
    }
    return "runs";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep k-Means: joint autoencoder and k-Means training"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "Experiment config file (key = value lines)");
    app.add_option("-s,--set", overrides, "Override a config field, e.g. --set train.lambda=0.1");

    std::string out_dir;

    auto* pretrain_cmd = app.add_subcommand("pretrain", "Reconstruction-only autoencoder training");
    pretrain_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto* train_cmd = app.add_subcommand("train", "Run the configured variant for every seed");
    train_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score finished runs (ACC / NMI / ARI)");
    std::vector<std::string> run_dirs;
    std::string labels_path;
    std::string split = "test";
    eval_cmd->add_option("-r,--run", run_dirs, "Run directory (repeatable)")->required();
    eval_cmd->add_option("-l,--labels", labels_path, "Newline-delimited integer labels")->required();
    eval_cmd->add_option("--split", split, "test | full")
        ->check(CLI::IsMember({"test", "full"}));
    eval_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto* linesearch_cmd = app.add_subcommand("linesearch", "Select lambda on the validation split");
    std::vector<double> grid;
    linesearch_cmd
        ->add_option("-g,--grid", grid,
                     "Lambda grid (default 1e-4,1e-3,1e-2,1e-1,1,10,100,1000)")
        ->delimiter(',');
    linesearch_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto* blobs_cmd = app.add_subcommand("blobs", "Write the synthetic blobs fixture as CSV");
    std::string blobs_out;
    blobs_cmd->add_option("-o,--out", blobs_out, "Output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    ConfigHandle config;
    if (dkm_status status = build_config(config_path, overrides, config); status != DKM_OK) {
        return fail(status);
    }

    if (blobs_cmd->parsed()) {
        if (dkm_status status = dkm_make_blobs_csv(config.ptr, blobs_out.c_str());
            status != DKM_OK) {
            return fail(status);
        }
        std::printf("wrote %s\n", blobs_out.c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        std::vector<const char*> dirs;
        dirs.reserve(run_dirs.size());
        for (const auto& d : run_dirs) dirs.push_back(d.c_str());
        const std::string resolved = out_dir.empty() ? "eval" : out_dir;
        if (dkm_status status =
                dkm_run_evaluate(dirs.data(), dirs.size(), labels_path.c_str(),
                                 split == "test" ? 1 : 0, resolved.c_str());
            status != DKM_OK) {
            return fail(status);
        }
        std::printf("wrote %s/runs.csv and %s/aggregate.json\n", resolved.c_str(),
                    resolved.c_str());
        return 0;
    }

    DatasetHandle dataset;
    if (dkm_status status = dkm_dataset_open(config.ptr, &dataset.ptr); status != DKM_OK) {
        return fail(status);
    }
    int64_t n = 0, dim = 0;
    dkm_dataset_dims(dataset.ptr, &n, &dim);
    std::fprintf(stderr, "dataset: %lld samples x %lld features\n",
                 static_cast<long long>(n), static_cast<long long>(dim));

    const std::string resolved = resolve_out_dir(config, out_dir);
    if (pretrain_cmd->parsed()) {
        if (dkm_status status = dkm_run_pretrain(config.ptr, dataset.ptr, resolved.c_str());
            status != DKM_OK) {
            return fail(status);
        }
        std::printf("pretraining artifacts under %s\n", resolved.c_str());
        return 0;
    }
    if (train_cmd->parsed()) {
        if (dkm_status status = dkm_run_train(config.ptr, dataset.ptr, resolved.c_str());
            status != DKM_OK) {
            return fail(status);
        }
        std::printf("run artifacts under %s\n", resolved.c_str());
        return 0;
    }
    if (linesearch_cmd->parsed()) {
        if (grid.empty()) {
            grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
        }
        double best_lambda = 0.0;
        if (dkm_status status = dkm_run_linesearch(config.ptr, dataset.ptr, grid.data(),
                                                   grid.size(), resolved.c_str(), &best_lambda);
            status != DKM_OK) {
            return fail(status);
        }
        std::printf("best lambda: %g (curve in %s/linesearch.csv)\n", best_lambda,
                    resolved.c_str());
        return 0;
    }
    return 0;
}
