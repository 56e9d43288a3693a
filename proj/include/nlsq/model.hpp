#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlsq/numkit.hpp"

namespace nlsq::model {

enum class Activation { Identity, Relu, Sigmoid, Softmax };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Identity;
};

// Dense feed-forward net over a flat weight vector. Per layer the flattened
// layout is W (out_dim x in_dim, row-major) followed by the bias.
struct Mlp {
    std::vector<LayerSpec> layers;
    numkit::Vector weights;

    std::size_t input_dim() const { return layers.front().in_dim; }
    std::size_t output_dim() const { return layers.back().out_dim; }
    std::size_t weight_count() const { return weights.size(); }
};

// Total flattened parameter count: sum of (in_dim + 1) * out_dim.
std::size_t weight_count(const std::vector<LayerSpec>& specs);

// Throws DimensionError if dims do not chain, any dim is zero, or softmax
// appears before the final layer.
void validate_specs(const std::vector<LayerSpec>& specs);

// Glorot-uniform weights in +-sqrt(6/(in+out)), zero biases; deterministic
// for a given seed.
Mlp init_weights(const std::vector<LayerSpec>& specs, std::uint64_t seed);

// Per-sample outputs after all activations; X is samples x input_dim.
numkit::Matrix forward(const Mlp& m, const numkit::Matrix& X);

// One batch through the sum-of-squares loss. Residuals are flattened
// sample-major: sample s, output component c sits at index s*C + c, so
// L = samples * output_dim.
struct BatchEval {
    numkit::Vector residuals;  // length L
    double loss = 0.0;         // (1/L) * ||r||^2
    numkit::Vector gradient;   // length n, backpropagated d(loss)/dw
};

BatchEval evaluate_batch(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y);

// Loss only (no gradient); used for optional post-epoch evaluation.
double mean_squared_loss(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y);

// Exact n x L Jacobian: column l is the weight-gradient of residual
// component l, one backprop per component. Guarded at n*L <= 10^7
// (CapacityError beyond). Satisfies (2/L) J r == evaluate_batch gradient.
numkit::Matrix exact_jacobian(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y);

} // namespace nlsq::model
