#pragma once

#include "core/clustering.hpp"
#include "core/dataset.hpp"
#include "core/training.hpp"

#include <map>
#include <string>
#include <vector>

namespace dkm {

/// Ordered key=value pairs from a flat config file. '#' starts a comment;
/// [section] headers are allowed and ignored (keys are dotted instead).
std::vector<std::pair<std::string, std::string>> parse_key_value_file(const std::string& path);
std::vector<std::pair<std::string, std::string>> parse_key_value_text(const std::string& text,
                                                                      const std::string& origin);

/// Aggregates every knob of an experiment. Unknown keys and malformed
/// values raise InvalidArgument naming the field.
struct ExperimentConfig {
    // dataset
    std::string dataset_kind;  // blobs | csv | idx | triplets
    std::string dataset_path;
    std::string dataset_labels_path;
    bool csv_has_labels = true;
    Normalization normalization = Normalization::unit_interval;
    int tfidf_top_k = 2000;
    int subsample_n = 0;  // 0 = keep everything
    std::uint64_t subsample_seed = 0;
    int blobs_per_cluster = 100;
    int blobs_k = 3;
    int blobs_dim = 10;
    double blobs_spread = 10.0;
    double blobs_sigma = 0.5;
    std::uint64_t blobs_seed = 0;

    // model
    int clusters = 0;
    std::vector<int> hidden = {500, 500, 2000};
    int embedding_dim = 0;  // 0 -> clusters
    DistanceKind distance = DistanceKind::squared_euclidean;
    MembershipKind membership = MembershipKind::parameterized_softmax;

    // training
    Variant variant = Variant::dkm_p;
    double lambda = 0.1;
    int batch_size = 256;
    double learning_rate = 1e-3;
    int pretrain_epochs = 50;
    int epochs_per_term = 0;  // 0 -> variant default (dkm_a: 5, dkm_p: 100)
    int alpha_terms = 40;
    double alpha_start = 0.1;
    double alpha_constant = 1000.0;
    double weight_decay = 0.0;
    std::vector<std::uint64_t> seeds = {0};
    std::uint64_t split_seed = 42;
    int threads = 0;  // 0 -> leave the Eigen default

    std::string output_dir;

    static ExperimentConfig from_file(const std::string& path);

    /// Applies one key=value override.
    void apply(const std::string& key, const std::string& value);

    /// Checks everything a training run needs; throws InvalidArgument naming
    /// the offending field.
    void validate_for_training() const;

    int effective_embedding_dim() const { return embedding_dim > 0 ? embedding_dim : clusters; }
    int effective_epochs_per_term() const;

    TrainPlan make_plan(std::uint64_t seed) const;

    /// Flat echo of every field, for manifests.
    std::map<std::string, std::string> to_map() const;
};

}  // namespace dkm
