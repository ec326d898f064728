#include "core/adam.hpp"

#include <cmath>
#include <string>

namespace dkm {

namespace {

void check_finite(const Matrix& g, const std::string& name) {
    if (!g.allFinite()) {
        throw NumericError("adam_step: non-finite gradient in " + name);
    }
}

void update_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                   double lr, double beta1, double beta2, double eps,
                   double bias1, double bias2) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.cwiseProduct(grad);
    const Matrix m_hat = m / bias1;
    const Matrix v_hat = v / bias2;
    param -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

void update_vector(Vector& param, const Vector& grad, Vector& m, Vector& v,
                   double lr, double beta1, double beta2, double eps,
                   double bias1, double bias2) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const Vector m_hat = m / bias1;
    const Vector v_hat = v / bias2;
    param -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

}  // namespace

void adam_step(DenseNetwork& net, Matrix* representatives,
               const GradientBundle& grads, AdamState& state) {
    if (grads.encoder.size() != net.encoder.size() || grads.decoder.size() != net.decoder.size()) {
        throw InvalidArgument("adam_step: gradient bundle layer count does not match network");
    }
    const bool with_reps = grads.has_representatives();
    if (with_reps && !representatives) {
        throw InvalidArgument("adam_step: bundle carries representative gradients but no representatives given");
    }
    if (with_reps && (grads.representatives.rows() != representatives->rows() ||
                      grads.representatives.cols() != representatives->cols())) {
        throw InvalidArgument("adam_step: representative gradient shape mismatch");
    }

    for (std::size_t i = 0; i < grads.encoder.size(); ++i) {
        check_finite(grads.encoder[i].weights, "encoder layer " + std::to_string(i) + " weights");
        check_finite(grads.encoder[i].bias, "encoder layer " + std::to_string(i) + " bias");
    }
    for (std::size_t i = 0; i < grads.decoder.size(); ++i) {
        check_finite(grads.decoder[i].weights, "decoder layer " + std::to_string(i) + " weights");
        check_finite(grads.decoder[i].bias, "decoder layer " + std::to_string(i) + " bias");
    }
    if (with_reps) check_finite(grads.representatives, "cluster representatives");

    if (!state.initialized) {
        const int k = with_reps ? static_cast<int>(representatives->rows()) : 0;
        const int p = with_reps ? static_cast<int>(representatives->cols()) : 0;
        state.first_moment = zero_gradients(net, k, p);
        state.second_moment = zero_gradients(net, k, p);
        state.initialized = true;
    }
    if (with_reps && !state.first_moment.has_representatives()) {
        state.first_moment.representatives =
            Matrix::Zero(representatives->rows(), representatives->cols());
        state.second_moment.representatives =
            Matrix::Zero(representatives->rows(), representatives->cols());
    }

    state.step_count += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    auto update_part = [&](std::vector<DenseLayer>& layers, const std::vector<LayerGrad>& g,
                           std::vector<LayerGrad>& m, std::vector<LayerGrad>& v) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            update_tensor(layers[i].weights, g[i].weights, m[i].weights, v[i].weights,
                          state.learning_rate, state.beta1, state.beta2, state.epsilon,
                          bias1, bias2);
            update_vector(layers[i].bias, g[i].bias, m[i].bias, v[i].bias,
                          state.learning_rate, state.beta1, state.beta2, state.epsilon,
                          bias1, bias2);
        }
    };
    update_part(net.encoder, grads.encoder, state.first_moment.encoder, state.second_moment.encoder);
    update_part(net.decoder, grads.decoder, state.first_moment.decoder, state.second_moment.decoder);
    if (with_reps) {
        update_tensor(*representatives, grads.representatives,
                      state.first_moment.representatives, state.second_moment.representatives,
                      state.learning_rate, state.beta1, state.beta2, state.epsilon, bias1, bias2);
        if (!representatives->allFinite()) {
            throw NumericError("adam_step: representatives became non-finite after update");
        }
    }
    for (const auto* part : {&net.encoder, &net.decoder}) {
        for (const auto& layer : *part) {
            if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
                throw NumericError("adam_step: network parameters became non-finite after update");
            }
        }
    }
    net.version += 1;
}

}  // namespace dkm
