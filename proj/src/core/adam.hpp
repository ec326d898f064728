#pragma once

#include "core/nn.hpp"

namespace dkm {

/// Adam optimizer state. Moments mirror the parameter shapes and are
/// allocated lazily on the first step.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    GradientBundle first_moment;
    GradientBundle second_moment;
    bool initialized = false;
};

/// One Adam update with bias correction, applied jointly to all network
/// parameters and, when the bundle carries them, the cluster representatives.
/// Throws NumericError naming the offending tensor on NaN gradients.
void adam_step(DenseNetwork& net, Matrix* representatives,
               const GradientBundle& grads, AdamState& state);

}  // namespace dkm
