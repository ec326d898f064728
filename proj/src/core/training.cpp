#include "core/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace dkm {

void AnnealingSchedule::validate() const {
    if (terms.empty()) throw InvalidArgument("schedule: needs at least one alpha term");
    if (epochs_per_term < 1) throw InvalidArgument("schedule: epochs_per_term must be positive");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!(terms[i] > 0.0) || !std::isfinite(terms[i])) {
            throw InvalidArgument("schedule: alpha terms must be positive and finite");
        }
        if (i > 0 && terms[i] <= terms[i - 1]) {
            throw InvalidArgument("schedule: alpha terms must be strictly increasing");
        }
    }
}

AnnealingSchedule build_annealing_sequence(int n_terms, double alpha_start, int epochs_per_term) {
    if (n_terms < 1) throw InvalidArgument("build_annealing_sequence: n_terms must be positive");
    if (!(alpha_start > 0.0)) {
        throw InvalidArgument("build_annealing_sequence: alpha_start must be positive");
    }
    AnnealingSchedule schedule;
    schedule.epochs_per_term = epochs_per_term;
    schedule.terms.reserve(static_cast<std::size_t>(n_terms));
    double alpha = alpha_start;
    schedule.terms.push_back(alpha);
    for (int n = 2; n <= n_terms; ++n) {
        const double log_n = std::log(static_cast<double>(n));
        alpha *= std::pow(2.0, 1.0 / (log_n * log_n));
        schedule.terms.push_back(alpha);
    }
    schedule.validate();
    return schedule;
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::dkm_a: return "dkm_a";
        case Variant::dkm_p: return "dkm_p";
        case Variant::ae_km: return "ae_km";
        case Variant::km: return "km";
    }
    return "unknown";
}

Variant variant_from_name(const std::string& name) {
    if (name == "dkm_a") return Variant::dkm_a;
    if (name == "dkm_p") return Variant::dkm_p;
    if (name == "ae_km") return Variant::ae_km;
    if (name == "km") return Variant::km;
    throw InvalidArgument("variant: unknown name '" + name + "'");
}

void TrainPlan::validate() const {
    if (batch_size < 1) throw InvalidArgument("plan.batch_size: must be positive");
    if (lambda < 0.0) throw InvalidArgument("plan.lambda: must be nonnegative");
    if (weight_decay < 0.0) throw InvalidArgument("plan.weight_decay: must be nonnegative");
    if (pretrain_epochs < 0) throw InvalidArgument("plan.pretrain_epochs: must be nonnegative");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("plan.learning_rate: must be nonnegative");
    if (variant == Variant::km) return;  // no network, schedule unused
    schedule.validate();
    if (variant == Variant::dkm_p) {
        if (pretrain_epochs < 1) {
            throw InvalidArgument("plan.pretrain_epochs: dkm_p requires pretraining (> 0 epochs)");
        }
        if (schedule.terms.size() != 1) {
            throw InvalidArgument("plan.schedule: dkm_p requires a single constant alpha term");
        }
    }
    if (variant == Variant::dkm_a) {
        if (pretrain_epochs != 0) {
            throw InvalidArgument("plan.pretrain_epochs: dkm_a does not pretrain (must be 0)");
        }
        if (schedule.terms.size() < 2) {
            throw InvalidArgument("plan.schedule: dkm_a requires a multi-term annealing schedule");
        }
    }
    if (variant == Variant::ae_km && pretrain_epochs < 1) {
        throw InvalidArgument("plan.pretrain_epochs: ae_km requires pretraining (> 0 epochs)");
    }
}

std::vector<std::vector<int>> minibatch_stream(int n_samples, int batch_size, int epoch_index,
                                               std::uint64_t seed) {
    if (batch_size < 1) throw InvalidArgument("minibatch_stream: batch_size must be positive");
    if (n_samples < 1) throw InvalidArgument("minibatch_stream: n_samples must be positive");
    std::vector<int> order(static_cast<std::size_t>(n_samples));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, kSaltMinibatch, static_cast<std::uint64_t>(epoch_index)));
    rng.shuffle(order);
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

namespace {

Matrix gather_rows(const Matrix& samples, const std::vector<int>& indices) {
    Matrix batch(static_cast<Eigen::Index>(indices.size()), samples.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        batch.row(static_cast<Eigen::Index>(i)) = samples.row(indices[i]);
    }
    return batch;
}

// One epoch of minibatch Adam. When model is null the loop minimizes the
// reconstruction loss alone; otherwise the joint objective at the given
// alpha. Returns the sample-weighted mean losses over the epoch, computed on
// each batch before its update.
EpochLoss run_epoch(DenseNetwork& net, ClusterModel* model, const Matrix& samples,
                    const TrainPlan& plan, double alpha, int epoch_index, AdamState& adam) {
    const auto batches = minibatch_stream(static_cast<int>(samples.rows()), plan.batch_size,
                                          epoch_index, plan.seed);
    EpochLoss epoch;
    epoch.alpha = alpha;
    double weight_total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const Matrix batch = gather_rows(samples, batches[b]);
        const double w = static_cast<double>(batch.rows());
        try {
            double total;
            GradientBundle grads;
            if (model) {
                DkmTerms terms;
                grads = dkm_gradients(batch, net, *model, alpha, plan.lambda, &terms);
                total = terms.reconstruction + plan.lambda * terms.clustering;
                epoch.reconstruction += w * terms.reconstruction;
                epoch.clustering += w * terms.clustering;
            } else {
                ForwardCache cache;
                const ForwardResult fwd = forward(net, batch, &cache);
                const double inv_b = 1.0 / w;
                // Row-by-row accumulation, matching the joint objective's
                // summation order so a lambda = 0 run reproduces this trace
                // bit-exactly.
                double recon_sum = 0.0;
                for (Eigen::Index i = 0; i < batch.rows(); ++i) {
                    recon_sum += (batch.row(i) - fwd.reconstructions.row(i)).squaredNorm();
                }
                total = recon_sum * inv_b;
                const Matrix recon_grad = (2.0 * inv_b) * (fwd.reconstructions - batch);
                const Matrix emb_grad = Matrix::Zero(batch.rows(), net.embedding_dim);
                grads = backward(net, cache, emb_grad, recon_grad);
                epoch.reconstruction += w * total;
            }
            if (plan.weight_decay > 0.0) {
                total += l2_penalty(net, plan.weight_decay, &grads);
            }
            epoch.total += w * total;
            adam_step(net, model ? &model->representatives : nullptr, grads, adam);
        } catch (const NumericError& err) {
            throw NumericError("epoch " + std::to_string(epoch_index) + ", batch " +
                               std::to_string(b) + ": " + err.what());
        }
        weight_total += w;
    }
    epoch.total /= weight_total;
    epoch.reconstruction /= weight_total;
    epoch.clustering /= weight_total;
    return epoch;
}

}  // namespace

std::vector<double> pretrain(DenseNetwork& net, const Matrix& samples, const TrainPlan& plan) {
    if (plan.pretrain_epochs < 1) {
        throw InvalidArgument("pretrain: plan.pretrain_epochs must be >= 1");
    }
    AdamState adam;
    adam.learning_rate = plan.learning_rate;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(plan.pretrain_epochs));
    for (int epoch = 0; epoch < plan.pretrain_epochs; ++epoch) {
        trace.push_back(run_epoch(net, nullptr, samples, plan, 0.0, epoch, adam).reconstruction);
    }
    return trace;
}

Matrix init_representatives(Variant variant, int k, int dim, const Matrix* embeddings,
                            std::uint64_t seed) {
    if (k < 1 || dim < 1) throw InvalidArgument("init_representatives: k and dim must be positive");
    Rng rng(derive_seed(seed, kSaltRepresentatives));
    if (variant == Variant::dkm_a) {
        Matrix reps(k, dim);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < dim; ++j) {
                reps(i, j) = rng.uniform(-1.0, 1.0);
            }
        }
        return reps;
    }
    if (!embeddings) {
        throw InvalidArgument("init_representatives: pretrained variants need embeddings");
    }
    const Matrix seeds = kmeans_pp_init(*embeddings, k, rng);
    return lloyd_kmeans(*embeddings, k, seeds).representatives;
}

RunRecord train(DenseNetwork& net, ClusterModel& model, const Matrix& samples,
                const TrainPlan& plan) {
    plan.validate();
    if (model.dim() != net.embedding_dim) {
        throw InvalidArgument("train: model dim does not match network embedding dim");
    }
    const auto started = std::chrono::steady_clock::now();

    RunRecord record;
    record.seed = plan.seed;
    AdamState adam;
    adam.learning_rate = plan.learning_rate;

    int epoch_index = 0;
    for (double alpha : plan.schedule.terms) {
        for (int t = 0; t < plan.schedule.epochs_per_term; ++t) {
            record.trace.push_back(
                run_epoch(net, &model, samples, plan, alpha, epoch_index, adam));
            ++epoch_index;
        }
    }

    record.representatives = model.representatives;
    record.assignment = assign_all(forward(net, samples).embeddings, model);
    record.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

}  // namespace dkm
