#pragma once

#include "core/config.hpp"
#include "core/evaluation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dkm {

/// Caps the number of threads Eigen may use for matrix products. 0 keeps
/// the current setting. Runs with the same config on the same machine stay
/// bit-reproducible either way.
void set_compute_threads(int threads);

/// Materializes the configured dataset (blobs / csv / idx / triplets, plus
/// optional subsampling).
LabeledDataset open_dataset(const ExperimentConfig& config);

/// Reconstruction-only pretraining per seed. Writes pretrain_seed<seed>/
/// directories with a checkpoint and the loss trace.
std::vector<std::filesystem::path> cmd_pretrain(const ExperimentConfig& config,
                                                const LabeledDataset& dataset,
                                                const std::filesystem::path& out_dir);

/// Full pipeline for the configured variant, one run directory per seed
/// containing manifest.txt, trace.csv, assignments.csv, representatives.csv,
/// embeddings.csv (network variants) and checkpoint.bin. Loss traces and
/// assignments are byte-reproducible from (config, seed, dataset bytes).
std::vector<std::filesystem::path> cmd_train(const ExperimentConfig& config,
                                             const LabeledDataset& dataset,
                                             const std::filesystem::path& out_dir);

enum class EvalSplit { test_only, full };

/// Scores finished runs against a label file, restricted to the chosen
/// split, and writes runs.csv plus aggregate.json (with the significance
/// matrix) into out_dir.
AggregateReport cmd_evaluate(const std::vector<std::string>& run_dirs,
                             const std::string& labels_path, EvalSplit split,
                             const std::filesystem::path& out_dir);

struct LineSearchResult {
    double best_lambda = 0.0;
    double best_accuracy = 0.0;
    std::vector<std::pair<double, double>> curve;  // (lambda, validation ACC)
};

/// Trains once per lambda on the full data (first configured seed) and
/// scores clustering accuracy on the validation split only. Ties prefer the
/// smaller lambda. Writes linesearch.csv.
LineSearchResult cmd_linesearch(const ExperimentConfig& config, const LabeledDataset& dataset,
                                const std::vector<double>& grid,
                                const std::filesystem::path& out_dir);

/// Writes the configured blobs fixture as a labeled CSV.
void cmd_blobs(const ExperimentConfig& config, const std::string& csv_path);

/// Reads key=value manifest written by cmd_train.
std::map<std::string, std::string> read_manifest(const std::filesystem::path& run_dir);

}  // namespace dkm
