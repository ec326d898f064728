#pragma once

#include "core/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dkm {

enum class Activation { relu, identity };

struct DenseLayer {
    Matrix weights;  // out_dim x in_dim
    Vector bias;     // out_dim
    Activation activation = Activation::relu;

    int in_dim() const { return static_cast<int>(weights.cols()); }
    int out_dim() const { return static_cast<int>(weights.rows()); }
};

/// Weights uniform in [-sqrt(6/(in+out)), +sqrt(6/(in+out))], bias zero.
DenseLayer xavier_init(int in_dim, int out_dim, Activation activation, Rng& rng);

/// Fully-connected autoencoder. The decoder mirrors the encoder layer dims.
/// The embedding layer and the output layer use the identity activation,
/// every other layer uses ReLU.
struct DenseNetwork {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    int input_dim = 0;
    int embedding_dim = 0;
    // Bumped on every parameter mutation; forward caches record it so that
    // backward can reject a cache computed against older parameters.
    std::uint64_t version = 0;

    std::size_t parameter_count() const;
};

/// Builds the encoder input_dim -> hidden... -> embedding_dim and the
/// mirrored decoder, Xavier-initialized in a fixed layer order.
DenseNetwork make_autoencoder(int input_dim, int embedding_dim,
                              const std::vector<int>& hidden_dims, Rng& rng);

struct ForwardCache {
    Matrix input;                             // B x d
    std::vector<Matrix> encoder_pre;          // pre-activation per layer
    std::vector<Matrix> encoder_post;         // post-activation per layer
    std::vector<Matrix> decoder_pre;
    std::vector<Matrix> decoder_post;
    std::uint64_t network_version = 0;
};

struct ForwardResult {
    Matrix embeddings;       // B x p
    Matrix reconstructions;  // B x d
};

/// Row-per-sample forward pass. When cache is non-null it is filled with
/// everything backward needs.
ForwardResult forward(const DenseNetwork& net, const Matrix& batch, ForwardCache* cache = nullptr);

struct LayerGrad {
    Matrix weights;
    Vector bias;
};

/// Gradients for every network parameter plus (optionally) the cluster
/// representatives. Shapes mirror the owning network / model.
struct GradientBundle {
    std::vector<LayerGrad> encoder;
    std::vector<LayerGrad> decoder;
    Matrix representatives;  // K x p; 0x0 when unused

    bool has_representatives() const { return representatives.size() > 0; }
};

GradientBundle zero_gradients(const DenseNetwork& net, int n_representatives = 0, int rep_dim = 0);

/// Exact reverse-mode gradients of the scalar loss whose partials wrt the
/// network outputs are supplied. Both paths contribute to the encoder:
/// embedding_grad feeds it directly, reconstruction_grad through the decoder.
GradientBundle backward(const DenseNetwork& net, const ForwardCache& cache,
                        const Matrix& embedding_grad, const Matrix& reconstruction_grad);

/// Penalty weight_decay * sum of squared Frobenius norms of all weight
/// matrices (biases excluded). When accumulate is non-null the gradient
/// contribution 2 * weight_decay * W is added into it.
double l2_penalty(const DenseNetwork& net, double weight_decay, GradientBundle* accumulate = nullptr);

struct AdamState;

/// Versioned binary checkpoint: dims, layer order, weights row-major, bias,
/// optional Adam state. Loading reproduces forward outputs bit-exactly.
void save_checkpoint(const std::string& path, const DenseNetwork& net,
                     const AdamState* optimizer = nullptr);
DenseNetwork load_checkpoint(const std::string& path, AdamState* optimizer = nullptr);

}  // namespace dkm
