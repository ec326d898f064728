#pragma once

#include "core/common.hpp"

#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace dkm {

enum class Normalization { none, unit_interval, signed_unit };

const char* normalization_name(Normalization n);

/// How the in-memory matrix was produced from the source files.
struct Provenance {
    std::string source;
    Normalization normalization = Normalization::none;
    int tfidf_top_k = 0;  // 0 when no feature selection was applied
    std::string notes;
};

struct LabeledDataset {
    Matrix samples;  // N x d
    std::optional<std::vector<int>> labels;
    std::string name;
    Provenance preprocessing;

    Eigen::Index n() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
    int n_classes() const;

    /// FNV-1a hash over dims, sample bytes and labels.
    std::string fingerprint() const;
};

/// IDX image/label pair (big-endian, magics 0x00000803 / 0x00000801), pixels
/// flattened row-major. unit_interval maps to v/255, signed_unit to
/// 2 v/255 - 1.
LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path,
                               Normalization normalization);

/// Rectangular numeric CSV; the label column is last when has_labels is set.
LabeledDataset load_dense_csv(const std::string& path, bool has_labels);

/// Writes samples (and labels as a last column when present and wanted).
void save_dense_csv(const std::string& path, const LabeledDataset& dataset, bool with_labels);

/// Newline-delimited integer labels.
std::vector<int> load_labels_file(const std::string& path);

struct SparseCounts {
    // Triplets (doc, term, count) with explicit logical dims.
    std::vector<std::tuple<int, int, long>> entries;
    int n_docs = 0;
    int n_terms = 0;
};

/// Parses a "doc_id term_id count" triplet file.
SparseCounts load_triplets(const std::string& path);

/// tf-idf = tf * ln(N/df) with raw counts; keeps the top_k terms by maximum
/// tf-idf over documents (ties to the lower term index) and emits the dense
/// tf-idf matrix over the kept terms.
LabeledDataset tfidf_select(const SparseCounts& counts, int top_k,
                            const std::optional<std::vector<int>>& labels = std::nullopt);

struct SplitIndices {
    std::vector<int> validation;  // floor(n/10) indices, sorted
    std::vector<int> test;        // the rest, sorted
    std::uint64_t seed = 0;
};

/// Seeded 10% validation / 90% test split.
SplitIndices validation_split(int n, std::uint64_t seed);

/// K seeded Gaussian blobs: centers uniform in [-center_spread,
/// center_spread]^d, isotropic noise, labels = generating component.
LabeledDataset make_blobs(int n_per_cluster, int k, int dim, double center_spread,
                          double noise_sigma, std::uint64_t seed);

/// Seeded without-replacement subsample of m rows.
LabeledDataset subsample(const LabeledDataset& dataset, int m, std::uint64_t seed);

}  // namespace dkm
