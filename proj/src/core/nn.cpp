#include "core/nn.hpp"

#include "core/adam.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace dkm {

DenseLayer xavier_init(int in_dim, int out_dim, Activation activation, Rng& rng) {
    if (in_dim < 1 || out_dim < 1) {
        throw InvalidArgument("xavier_init: dimensions must be positive, got in_dim=" +
                              std::to_string(in_dim) + " out_dim=" + std::to_string(out_dim));
    }
    const double bound = std::sqrt(6.0 / (in_dim + out_dim));
    DenseLayer layer;
    layer.weights.resize(out_dim, in_dim);
    // Row-major fill order so the draw sequence is part of the format.
    for (int r = 0; r < out_dim; ++r) {
        for (int c = 0; c < in_dim; ++c) {
            layer.weights(r, c) = rng.uniform(-bound, bound);
        }
    }
    layer.bias = Vector::Zero(out_dim);
    layer.activation = activation;
    return layer;
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto* part : {&encoder, &decoder}) {
        for (const auto& layer : *part) {
            n += static_cast<std::size_t>(layer.weights.size()) + layer.bias.size();
        }
    }
    return n;
}

DenseNetwork make_autoencoder(int input_dim, int embedding_dim,
                              const std::vector<int>& hidden_dims, Rng& rng) {
    if (input_dim < 1 || embedding_dim < 1) {
        throw InvalidArgument("make_autoencoder: input_dim and embedding_dim must be positive");
    }
    for (int h : hidden_dims) {
        if (h < 1) throw InvalidArgument("make_autoencoder: hidden dims must be positive");
    }
    DenseNetwork net;
    net.input_dim = input_dim;
    net.embedding_dim = embedding_dim;

    std::vector<int> enc_dims;
    enc_dims.push_back(input_dim);
    enc_dims.insert(enc_dims.end(), hidden_dims.begin(), hidden_dims.end());
    enc_dims.push_back(embedding_dim);

    for (std::size_t i = 0; i + 1 < enc_dims.size(); ++i) {
        const bool is_embedding = (i + 2 == enc_dims.size());
        net.encoder.push_back(xavier_init(enc_dims[i], enc_dims[i + 1],
                                          is_embedding ? Activation::identity : Activation::relu,
                                          rng));
    }
    // Decoder mirrors the encoder dims in reverse.
    for (std::size_t i = enc_dims.size() - 1; i > 0; --i) {
        const bool is_output = (i == 1);
        net.decoder.push_back(xavier_init(enc_dims[i], enc_dims[i - 1],
                                          is_output ? Activation::identity : Activation::relu,
                                          rng));
    }
    net.version = 1;
    return net;
}

namespace {

void run_layers(const std::vector<DenseLayer>& layers, const Matrix& input,
                Matrix& output, std::vector<Matrix>* pre, std::vector<Matrix>* post) {
    Matrix current = input;
    for (const auto& layer : layers) {
        Matrix z = current * layer.weights.transpose();
        z.rowwise() += layer.bias.transpose();
        if (pre) pre->push_back(z);
        if (layer.activation == Activation::relu) {
            current = z.cwiseMax(0.0);
        } else {
            current = std::move(z);
        }
        if (post) post->push_back(current);
    }
    output = std::move(current);
}

}  // namespace

ForwardResult forward(const DenseNetwork& net, const Matrix& batch, ForwardCache* cache) {
    if (batch.cols() != net.input_dim) {
        throw InvalidArgument("forward: batch has " + std::to_string(batch.cols()) +
                              " columns, network expects " + std::to_string(net.input_dim));
    }
    ForwardResult result;
    if (cache) {
        cache->input = batch;
        cache->encoder_pre.clear();
        cache->encoder_post.clear();
        cache->decoder_pre.clear();
        cache->decoder_post.clear();
        cache->network_version = net.version;
    }
    run_layers(net.encoder, batch, result.embeddings,
               cache ? &cache->encoder_pre : nullptr, cache ? &cache->encoder_post : nullptr);
    run_layers(net.decoder, result.embeddings, result.reconstructions,
               cache ? &cache->decoder_pre : nullptr, cache ? &cache->decoder_post : nullptr);
    return result;
}

GradientBundle zero_gradients(const DenseNetwork& net, int n_representatives, int rep_dim) {
    GradientBundle g;
    for (const auto& layer : net.encoder) {
        g.encoder.push_back({Matrix::Zero(layer.out_dim(), layer.in_dim()),
                             Vector::Zero(layer.out_dim())});
    }
    for (const auto& layer : net.decoder) {
        g.decoder.push_back({Matrix::Zero(layer.out_dim(), layer.in_dim()),
                             Vector::Zero(layer.out_dim())});
    }
    if (n_representatives > 0) {
        g.representatives = Matrix::Zero(n_representatives, rep_dim);
    }
    return g;
}

namespace {

// Backpropagates delta (dL/d output) through one stack of layers. Returns
// dL/d input of the stack and fills grads in layer order.
Matrix backprop_layers(const std::vector<DenseLayer>& layers, const Matrix& stack_input,
                       const std::vector<Matrix>& pre, const std::vector<Matrix>& post,
                       Matrix delta, std::vector<LayerGrad>& grads) {
    grads.resize(layers.size());
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
        if (layers[i].activation == Activation::relu) {
            delta = (pre[static_cast<std::size_t>(i)].array() > 0.0).select(delta, 0.0);
        }
        const Matrix& layer_input = (i == 0) ? stack_input : post[static_cast<std::size_t>(i) - 1];
        grads[static_cast<std::size_t>(i)].weights = delta.transpose() * layer_input;
        grads[static_cast<std::size_t>(i)].bias = delta.colwise().sum().transpose();
        if (i > 0) {
            delta = delta * layers[static_cast<std::size_t>(i)].weights;
        } else {
            return delta * layers[0].weights;
        }
    }
    return delta;  // unreachable for non-empty stacks
}

}  // namespace

GradientBundle backward(const DenseNetwork& net, const ForwardCache& cache,
                        const Matrix& embedding_grad, const Matrix& reconstruction_grad) {
    if (cache.network_version != net.version) {
        throw ContractViolation("backward: cache is stale (network parameters changed since forward)");
    }
    if (cache.encoder_pre.size() != net.encoder.size() ||
        cache.decoder_pre.size() != net.decoder.size()) {
        throw ContractViolation("backward: cache layer count does not match network");
    }
    const auto batch_rows = cache.input.rows();
    if (embedding_grad.rows() != batch_rows || embedding_grad.cols() != net.embedding_dim ||
        reconstruction_grad.rows() != batch_rows || reconstruction_grad.cols() != net.input_dim) {
        throw InvalidArgument("backward: upstream gradient shapes do not match forward outputs");
    }

    GradientBundle bundle;
    const Matrix& embeddings = cache.encoder_post.back();
    Matrix grad_at_embedding =
        backprop_layers(net.decoder, embeddings, cache.decoder_pre, cache.decoder_post,
                        reconstruction_grad, bundle.decoder);
    grad_at_embedding += embedding_grad;
    backprop_layers(net.encoder, cache.input, cache.encoder_pre, cache.encoder_post,
                    grad_at_embedding, bundle.encoder);
    return bundle;
}

double l2_penalty(const DenseNetwork& net, double weight_decay, GradientBundle* accumulate) {
    if (weight_decay < 0.0) {
        throw InvalidArgument("l2_penalty: weight_decay must be nonnegative");
    }
    double penalty = 0.0;
    if (accumulate) {
        if (accumulate->encoder.size() != net.encoder.size() ||
            accumulate->decoder.size() != net.decoder.size()) {
            throw InvalidArgument("l2_penalty: gradient bundle shape mismatch");
        }
    }
    auto add_part = [&](const std::vector<DenseLayer>& layers, std::vector<LayerGrad>* grads) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            penalty += weight_decay * layers[i].weights.squaredNorm();
            if (grads) {
                (*grads)[i].weights += 2.0 * weight_decay * layers[i].weights;
            }
        }
    };
    add_part(net.encoder, accumulate ? &accumulate->encoder : nullptr);
    add_part(net.decoder, accumulate ? &accumulate->decoder : nullptr);
    return penalty;
}

// ---------------------------------------------------------------------------
// Checkpoint format: little-endian binary.
//   magic "DKMC" | u32 version=1 | i32 input_dim | i32 embedding_dim
//   u32 n_encoder | u32 n_decoder
//   per layer: u32 out | u32 in | u8 activation | weights row-major f64 | bias f64
//   u8 has_adam | (adam scalars + moments in the same layer order)
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'K', 'M', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) throw IoError("checkpoint: write failed");
}

template <typename T>
void write_pod(std::ofstream& out, T value) {
    write_bytes(out, &value, sizeof(T));
}

void write_matrix_rowmajor(std::ofstream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            write_pod(out, m(r, c));
        }
    }
}

void write_vector(std::ofstream& out, const Vector& v) {
    write_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void read_bytes(std::ifstream& in, void* data, std::size_t len, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in.gcount()) != len) {
        throw FormatError(std::string("checkpoint: truncated while reading ") + what);
    }
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
    T value;
    read_bytes(in, &value, sizeof(T), what);
    return value;
}

Matrix read_matrix_rowmajor(std::ifstream& in, std::uint32_t rows, std::uint32_t cols) {
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
            m(r, c) = read_pod<double>(in, "weights");
        }
    }
    return m;
}

Vector read_vector(std::ifstream& in, std::uint32_t n) {
    Vector v(n);
    read_bytes(in, v.data(), sizeof(double) * n, "bias");
    return v;
}

void write_layer_grads(std::ofstream& out, const std::vector<LayerGrad>& grads) {
    for (const auto& g : grads) {
        write_matrix_rowmajor(out, g.weights);
        write_vector(out, g.bias);
    }
}

void read_layer_grads(std::ifstream& in, const std::vector<DenseLayer>& layers,
                      std::vector<LayerGrad>& grads) {
    grads.clear();
    for (const auto& layer : layers) {
        LayerGrad g;
        g.weights = read_matrix_rowmajor(in, static_cast<std::uint32_t>(layer.out_dim()),
                                         static_cast<std::uint32_t>(layer.in_dim()));
        g.bias = read_vector(in, static_cast<std::uint32_t>(layer.out_dim()));
        grads.push_back(std::move(g));
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const DenseNetwork& net, const AdamState* optimizer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    write_bytes(out, kMagic, 4);
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::int32_t>(net.input_dim));
    write_pod(out, static_cast<std::int32_t>(net.embedding_dim));
    write_pod(out, static_cast<std::uint32_t>(net.encoder.size()));
    write_pod(out, static_cast<std::uint32_t>(net.decoder.size()));
    for (const auto* part : {&net.encoder, &net.decoder}) {
        for (const auto& layer : *part) {
            write_pod(out, static_cast<std::uint32_t>(layer.out_dim()));
            write_pod(out, static_cast<std::uint32_t>(layer.in_dim()));
            write_pod(out, static_cast<std::uint8_t>(layer.activation == Activation::relu ? 1 : 0));
            write_matrix_rowmajor(out, layer.weights);
            write_vector(out, layer.bias);
        }
    }
    write_pod(out, static_cast<std::uint8_t>(optimizer ? 1 : 0));
    if (optimizer) {
        write_pod(out, optimizer->learning_rate);
        write_pod(out, optimizer->beta1);
        write_pod(out, optimizer->beta2);
        write_pod(out, optimizer->epsilon);
        write_pod(out, static_cast<std::int64_t>(optimizer->step_count));
        write_layer_grads(out, optimizer->first_moment.encoder);
        write_layer_grads(out, optimizer->first_moment.decoder);
        write_layer_grads(out, optimizer->second_moment.encoder);
        write_layer_grads(out, optimizer->second_moment.decoder);
    }
    out.close();
    if (!out) throw IoError("checkpoint: close failed: " + path);
}

DenseNetwork load_checkpoint(const std::string& path, AdamState* optimizer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    char magic[4];
    read_bytes(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic at offset 0 in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, "format version");
    if (version != kFormatVersion) {
        throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
    }
    DenseNetwork net;
    net.input_dim = read_pod<std::int32_t>(in, "input_dim");
    net.embedding_dim = read_pod<std::int32_t>(in, "embedding_dim");
    const auto n_enc = read_pod<std::uint32_t>(in, "encoder layer count");
    const auto n_dec = read_pod<std::uint32_t>(in, "decoder layer count");
    auto read_layers = [&](std::uint32_t count, std::vector<DenseLayer>& layers) {
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto out_dim = read_pod<std::uint32_t>(in, "layer out_dim");
            const auto in_dim = read_pod<std::uint32_t>(in, "layer in_dim");
            const auto act = read_pod<std::uint8_t>(in, "layer activation");
            DenseLayer layer;
            layer.activation = act ? Activation::relu : Activation::identity;
            layer.weights = read_matrix_rowmajor(in, out_dim, in_dim);
            layer.bias = read_vector(in, out_dim);
            layers.push_back(std::move(layer));
        }
    };
    read_layers(n_enc, net.encoder);
    read_layers(n_dec, net.decoder);
    const auto has_adam = read_pod<std::uint8_t>(in, "adam flag");
    if (has_adam && optimizer) {
        optimizer->learning_rate = read_pod<double>(in, "adam learning_rate");
        optimizer->beta1 = read_pod<double>(in, "adam beta1");
        optimizer->beta2 = read_pod<double>(in, "adam beta2");
        optimizer->epsilon = read_pod<double>(in, "adam epsilon");
        optimizer->step_count = read_pod<std::int64_t>(in, "adam step_count");
        read_layer_grads(in, net.encoder, optimizer->first_moment.encoder);
        read_layer_grads(in, net.decoder, optimizer->first_moment.decoder);
        read_layer_grads(in, net.encoder, optimizer->second_moment.encoder);
        read_layer_grads(in, net.decoder, optimizer->second_moment.decoder);
        optimizer->initialized = true;
    }
    net.version = 1;
    return net;
}

}  // namespace dkm
