#include "core/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>

namespace dkm {

namespace fs = std::filesystem;

void set_compute_threads(int threads) {
    if (threads > 0) Eigen::setNbThreads(threads);
}

LabeledDataset open_dataset(const ExperimentConfig& config) {
    LabeledDataset ds;
    if (config.dataset_kind == "blobs") {
        ds = make_blobs(config.blobs_per_cluster, config.blobs_k, config.blobs_dim,
                        config.blobs_spread, config.blobs_sigma, config.blobs_seed);
    } else if (config.dataset_kind == "csv") {
        ds = load_dense_csv(config.dataset_path, config.csv_has_labels);
    } else if (config.dataset_kind == "idx") {
        if (config.dataset_labels_path.empty()) {
            throw InvalidArgument("config field 'dataset.labels': required for idx datasets");
        }
        ds = load_idx_images(config.dataset_path, config.dataset_labels_path,
                             config.normalization);
    } else if (config.dataset_kind == "triplets") {
        const SparseCounts counts = load_triplets(config.dataset_path);
        std::optional<std::vector<int>> labels;
        if (!config.dataset_labels_path.empty()) {
            labels = load_labels_file(config.dataset_labels_path);
        }
        ds = tfidf_select(counts, config.tfidf_top_k, labels);
    } else {
        throw InvalidArgument("config field 'dataset.kind': required");
    }
    if (config.subsample_n > 0) {
        ds = subsample(ds, config.subsample_n, config.subsample_seed);
    }
    return ds;
}

namespace {

struct PipelineResult {
    std::optional<DenseNetwork> net;
    Matrix representatives;
    std::vector<int> assignment;
    std::vector<double> pretrain_trace;
    std::vector<EpochLoss> train_trace;
    double duration_seconds = 0.0;
};

PipelineResult run_pipeline(const ExperimentConfig& config, const LabeledDataset& dataset,
                            std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    PipelineResult result;
    const int k = config.clusters;
    const TrainPlan plan = config.make_plan(seed);

    if (config.variant == Variant::km) {
        Rng rng(derive_seed(seed, kSaltRepresentatives));
        const KMeansResult km =
            lloyd_kmeans(dataset.samples, k, kmeans_pp_init(dataset.samples, k, rng));
        result.representatives = km.representatives;
        result.assignment = km.assignment;
    } else {
        const int p = config.effective_embedding_dim();
        Rng net_rng(derive_seed(seed, kSaltNetworkInit));
        DenseNetwork net =
            make_autoencoder(static_cast<int>(dataset.dim()), p, config.hidden, net_rng);

        ClusterModel model;
        model.distance = config.distance;
        model.membership = config.membership;

        if (config.variant == Variant::dkm_a) {
            model.representatives = init_representatives(Variant::dkm_a, k, p, nullptr, seed);
        } else {
            result.pretrain_trace = pretrain(net, dataset.samples, plan);
            const Matrix embeddings = forward(net, dataset.samples).embeddings;
            model.representatives =
                init_representatives(config.variant, k, p, &embeddings, seed);
        }

        if (config.variant == Variant::ae_km) {
            const Matrix embeddings = forward(net, dataset.samples).embeddings;
            result.assignment = assign_all(embeddings, model);
        } else {
            RunRecord record = train(net, model, dataset.samples, plan);
            result.train_trace = std::move(record.trace);
            result.assignment = std::move(record.assignment);
        }
        result.representatives = model.representatives;
        result.net = std::move(net);
    }
    result.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

void write_trace_csv(const fs::path& path, const PipelineResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "phase,epoch,alpha,total,reconstruction,clustering\n";
    for (std::size_t i = 0; i < result.pretrain_trace.size(); ++i) {
        const std::string v = format_double(result.pretrain_trace[i]);
        out << "pretrain," << i << ",0," << v << ',' << v << ",0\n";
    }
    for (std::size_t i = 0; i < result.train_trace.size(); ++i) {
        const EpochLoss& e = result.train_trace[i];
        out << "train," << i << ',' << format_double(e.alpha) << ',' << format_double(e.total)
            << ',' << format_double(e.reconstruction) << ',' << format_double(e.clustering)
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_assignments_csv(const fs::path& path, const std::vector<int>& assignment) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "index,cluster\n";
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out << i << ',' << assignment[i] << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_manifest(const fs::path& path, const ExperimentConfig& config,
                    const LabeledDataset& dataset, std::uint64_t seed,
                    const PipelineResult& result) {
    std::map<std::string, std::string> entries = config.to_map();
    entries["run.seed"] = std::to_string(seed);
    entries["run.n_samples"] = std::to_string(dataset.n());
    entries["run.dim"] = std::to_string(dataset.dim());
    entries["run.dataset_fingerprint"] = dataset.fingerprint();
    entries["run.pretrain_epochs_run"] = std::to_string(result.pretrain_trace.size());
    entries["run.train_epochs_run"] = std::to_string(result.train_trace.size());
    entries["run.duration_seconds"] = format_double(result.duration_seconds);
    entries["run.preprocessing"] = dataset.preprocessing.source;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& [key, value] : entries) {
        out << key << " = " << value << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_labels_file(const fs::path& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (int l : labels) out << l << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

fs::path write_run_artifacts(const ExperimentConfig& config, const LabeledDataset& dataset,
                             std::uint64_t seed, const PipelineResult& result,
                             const fs::path& out_dir) {
    const fs::path run_dir =
        out_dir / (std::string(variant_name(config.variant)) + "_seed" + std::to_string(seed));
    fs::create_directories(run_dir);
    write_manifest(run_dir / "manifest.txt", config, dataset, seed, result);
    write_trace_csv(run_dir / "trace.csv", result);
    write_assignments_csv(run_dir / "assignments.csv", result.assignment);
    save_representatives_csv((run_dir / "representatives.csv").string(), result.representatives);
    if (result.net) {
        save_checkpoint((run_dir / "checkpoint.bin").string(), *result.net);
        const Matrix embeddings = forward(*result.net, dataset.samples).embeddings;
        save_representatives_csv((run_dir / "embeddings.csv").string(), embeddings);
    }
    return run_dir;
}

}  // namespace

std::vector<fs::path> cmd_pretrain(const ExperimentConfig& config, const LabeledDataset& dataset,
                                   const fs::path& out_dir) {
    set_compute_threads(config.threads);
    if (config.variant == Variant::km) {
        throw InvalidArgument("config field 'train.variant': km has no network to pretrain");
    }
    fs::create_directories(out_dir);
    std::vector<fs::path> dirs;
    for (std::uint64_t seed : config.seeds) {
        TrainPlan plan = config.make_plan(seed);
        if (plan.pretrain_epochs < 1) plan.pretrain_epochs = config.pretrain_epochs;
        Rng net_rng(derive_seed(seed, kSaltNetworkInit));
        DenseNetwork net = make_autoencoder(static_cast<int>(dataset.dim()),
                                            config.effective_embedding_dim(), config.hidden,
                                            net_rng);
        const auto started = std::chrono::steady_clock::now();
        PipelineResult result;
        result.pretrain_trace = pretrain(net, dataset.samples, plan);
        result.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        const fs::path run_dir = out_dir / ("pretrain_seed" + std::to_string(seed));
        fs::create_directories(run_dir);
        write_manifest(run_dir / "manifest.txt", config, dataset, seed, result);
        write_trace_csv(run_dir / "trace.csv", result);
        save_checkpoint((run_dir / "checkpoint.bin").string(), net);
        dirs.push_back(run_dir);
    }
    return dirs;
}

std::vector<fs::path> cmd_train(const ExperimentConfig& config, const LabeledDataset& dataset,
                                const fs::path& out_dir) {
    set_compute_threads(config.threads);
    config.validate_for_training();
    fs::create_directories(out_dir);
    if (dataset.labels) {
        write_labels_file(out_dir / "labels.txt", *dataset.labels);
    }
    std::vector<fs::path> dirs;
    for (std::uint64_t seed : config.seeds) {
        const PipelineResult result = run_pipeline(config, dataset, seed);
        dirs.push_back(write_run_artifacts(config, dataset, seed, result, out_dir));
    }
    return dirs;
}

std::map<std::string, std::string> read_manifest(const fs::path& run_dir) {
    const fs::path path = run_dir / "manifest.txt";
    if (!fs::exists(path)) {
        throw IoError("missing manifest: " + path.string());
    }
    std::map<std::string, std::string> entries;
    for (const auto& [key, value] : parse_key_value_file(path.string())) {
        entries[key] = value;
    }
    return entries;
}

namespace {

std::vector<int> read_assignments_csv(const fs::path& run_dir) {
    const fs::path path = run_dir / "assignments.csv";
    std::ifstream in(path);
    if (!in) throw IoError("missing assignments: " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> assignment;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError(path.string() + ": bad row at line " + std::to_string(line_no));
        }
        assignment.push_back(std::stoi(line.substr(comma + 1)));
    }
    if (assignment.empty()) throw FormatError(path.string() + ": no assignments");
    return assignment;
}

std::string manifest_value(const std::map<std::string, std::string>& manifest,
                           const std::string& key, const fs::path& run_dir) {
    const auto it = manifest.find(key);
    if (it == manifest.end()) {
        throw FormatError("manifest in " + run_dir.string() + " is missing '" + key + "'");
    }
    return it->second;
}

template <typename Select>
std::vector<int> gather(const std::vector<int>& values, const std::vector<int>& indices,
                        Select select) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(select(values, i));
    return out;
}

}  // namespace

AggregateReport cmd_evaluate(const std::vector<std::string>& run_dirs,
                             const std::string& labels_path, EvalSplit split,
                             const fs::path& out_dir) {
    if (run_dirs.empty()) throw InvalidArgument("cmd_evaluate: no run directories given");
    const std::vector<int> truth = load_labels_file(labels_path);

    fs::create_directories(out_dir);
    std::ofstream runs_csv(out_dir / "runs.csv", std::ios::trunc);
    if (!runs_csv) throw IoError("cannot open for writing: " + (out_dir / "runs.csv").string());
    runs_csv << "variant,seed,acc,nmi,ari\n";

    std::map<std::string, std::vector<MetricSample>> by_variant;
    for (const auto& dir_name : run_dirs) {
        const fs::path run_dir(dir_name);
        const auto manifest = read_manifest(run_dir);
        const std::string variant = manifest_value(manifest, "train.variant", run_dir);
        const auto seed =
            static_cast<std::uint64_t>(std::stoull(manifest_value(manifest, "run.seed", run_dir)));
        const int n = std::stoi(manifest_value(manifest, "run.n_samples", run_dir));
        const auto split_seed = static_cast<std::uint64_t>(
            std::stoull(manifest_value(manifest, "split_seed", run_dir)));

        const std::vector<int> assignment = read_assignments_csv(run_dir);
        if (static_cast<int>(assignment.size()) != n) {
            throw FormatError(run_dir.string() + ": assignment length does not match manifest n");
        }
        if (truth.size() != assignment.size()) {
            throw InvalidArgument("cmd_evaluate: label file has " + std::to_string(truth.size()) +
                                  " entries, runs have " + std::to_string(assignment.size()));
        }

        std::vector<int> indices;
        if (split == EvalSplit::test_only) {
            indices = validation_split(n, split_seed).test;
        } else {
            indices.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) indices[static_cast<std::size_t>(i)] = i;
        }
        auto at = [](const std::vector<int>& v, int i) { return v[static_cast<std::size_t>(i)]; };
        const ContingencyTable table =
            contingency(gather(assignment, indices, at), gather(truth, indices, at));

        MetricSample sample;
        sample.seed = seed;
        sample.acc = accuracy_hungarian(table);
        sample.nmi = nmi(table);
        sample.ari = ari(table);
        by_variant[variant].push_back(sample);
        runs_csv << variant << ',' << seed << ',' << format_double(sample.acc) << ','
                 << format_double(sample.nmi) << ',' << format_double(sample.ari) << '\n';
    }
    if (!runs_csv) throw IoError("write failed: " + (out_dir / "runs.csv").string());
    runs_csv.close();

    const AggregateReport report = aggregate(by_variant);

    nlohmann::json j;
    j["split"] = split == EvalSplit::test_only ? "test_only" : "full";
    for (const auto& stats : report.stats) {
        j["variants"][stats.variant] = {
            {"n_runs", stats.n_runs},
            {"acc", {{"mean", stats.acc_mean}, {"std", stats.acc_std}}},
            {"nmi", {{"mean", stats.nmi_mean}, {"std", stats.nmi_std}}},
            {"ari", {{"mean", stats.ari_mean}, {"std", stats.ari_std}}},
        };
    }
    j["significance"] = nlohmann::json::array();
    for (const auto& test : report.tests) {
        j["significance"].push_back({{"variant_a", test.variant_a},
                                     {"variant_b", test.variant_b},
                                     {"metric", test.metric},
                                     {"t", test.t},
                                     {"p", test.p},
                                     {"significant", test.significant}});
    }
    std::ofstream json_out(out_dir / "aggregate.json", std::ios::trunc);
    if (!json_out) throw IoError("cannot open for writing: " + (out_dir / "aggregate.json").string());
    json_out << j.dump(2) << '\n';
    if (!json_out) throw IoError("write failed: " + (out_dir / "aggregate.json").string());
    return report;
}

LineSearchResult cmd_linesearch(const ExperimentConfig& config, const LabeledDataset& dataset,
                                const std::vector<double>& grid, const fs::path& out_dir) {
    if (grid.empty()) throw InvalidArgument("cmd_linesearch: empty lambda grid");
    if (!dataset.labels) {
        throw InvalidArgument("cmd_linesearch: dataset has no labels for validation scoring");
    }
    set_compute_threads(config.threads);
    config.validate_for_training();

    const SplitIndices split = validation_split(static_cast<int>(dataset.n()), config.split_seed);
    // The scoring path only ever sees validation-index labels.
    std::vector<int> truth_validation;
    truth_validation.reserve(split.validation.size());
    for (int i : split.validation) {
        truth_validation.push_back((*dataset.labels)[static_cast<std::size_t>(i)]);
    }

    std::vector<double> lambdas = grid;
    std::sort(lambdas.begin(), lambdas.end());

    LineSearchResult result;
    result.best_accuracy = -1.0;
    for (double lambda : lambdas) {
        ExperimentConfig candidate = config;
        candidate.lambda = lambda;
        const PipelineResult run = run_pipeline(candidate, dataset, config.seeds.front());
        std::vector<int> pred_validation;
        pred_validation.reserve(split.validation.size());
        for (int i : split.validation) {
            pred_validation.push_back(run.assignment[static_cast<std::size_t>(i)]);
        }
        const double acc = accuracy_hungarian(contingency(pred_validation, truth_validation));
        result.curve.emplace_back(lambda, acc);
        // Strict improvement: equal scores keep the smaller lambda.
        if (acc > result.best_accuracy) {
            result.best_accuracy = acc;
            result.best_lambda = lambda;
        }
    }

    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "linesearch.csv", std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + (out_dir / "linesearch.csv").string());
    out << "lambda,validation_acc\n";
    for (const auto& [lambda, acc] : result.curve) {
        out << format_double(lambda) << ',' << format_double(acc) << '\n';
    }
    out << "# best_lambda = " << format_double(result.best_lambda) << '\n';
    if (!out) throw IoError("write failed: " + (out_dir / "linesearch.csv").string());
    return result;
}

void cmd_blobs(const ExperimentConfig& config, const std::string& csv_path) {
    const LabeledDataset ds = make_blobs(config.blobs_per_cluster, config.blobs_k,
                                         config.blobs_dim, config.blobs_spread,
                                         config.blobs_sigma, config.blobs_seed);
    save_dense_csv(csv_path, ds, true);
}

}  // namespace dkm
