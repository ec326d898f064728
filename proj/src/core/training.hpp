#pragma once

#include "core/adam.hpp"
#include "core/clustering.hpp"

#include <vector>

namespace dkm {

struct AnnealingSchedule {
    std::vector<double> terms;  // strictly increasing; single term = constant
    int epochs_per_term = 5;

    int total_epochs() const { return static_cast<int>(terms.size()) * epochs_per_term; }
    void validate() const;
};

/// Inverse-temperature sequence alpha_1 = alpha_start, then
/// alpha_{n+1} = 2^(1/ln(n)^2) * alpha_n. The n = 1 step has an undefined
/// exponent (ln 1 = 0), so the recursion starts at n = 2 with
/// alpha_2 = alpha_1 * 2^(1/ln(2)^2).
AnnealingSchedule build_annealing_sequence(int n_terms, double alpha_start = 0.1,
                                           int epochs_per_term = 5);

enum class Variant { dkm_a, dkm_p, ae_km, km };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct TrainPlan {
    Variant variant = Variant::dkm_p;
    double lambda = 0.0;
    int batch_size = 256;
    int pretrain_epochs = 0;
    AnnealingSchedule schedule;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;
    double learning_rate = 1e-3;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

/// Per-epoch index batches: a fresh permutation derived from (seed, epoch),
/// chunked into batch_size groups, final partial batch kept.
std::vector<std::vector<int>> minibatch_stream(int n_samples, int batch_size, int epoch_index,
                                               std::uint64_t seed);

struct EpochLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double clustering = 0.0;  // unweighted by lambda
    double alpha = 0.0;
};

struct RunRecord {
    std::vector<EpochLoss> trace;
    Matrix representatives;
    std::vector<int> assignment;  // hard assignment on the full dataset
    double duration_seconds = 0.0;
    std::uint64_t seed = 0;
};

/// Reconstruction-only training with Adam for plan.pretrain_epochs epochs.
/// Returns the per-epoch reconstruction loss trace.
std::vector<double> pretrain(DenseNetwork& net, const Matrix& samples, const TrainPlan& plan);

/// dkm_a: uniform U(-1,1) entries. dkm_p / ae_km: Lloyd's k-Means with
/// k-means++ seeding on the provided embeddings.
Matrix init_representatives(Variant variant, int k, int dim, const Matrix* embeddings,
                            std::uint64_t seed);

/// Joint training loop: for each schedule term, epochs_per_term epochs of
/// seeded shuffled minibatches, each performing one joint Adam update of all
/// network parameters and representatives.
RunRecord train(DenseNetwork& net, ClusterModel& model, const Matrix& samples,
                const TrainPlan& plan);

}  // namespace dkm
