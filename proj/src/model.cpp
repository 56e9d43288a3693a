#include "nlsq/model.hpp"

#include <cmath>
#include <string>

#include "nlsq/errors.hpp"
#include "nlsq/rng.hpp"

namespace nlsq::model {
namespace {

constexpr std::size_t kJacobianCapacity = 10'000'000; // n*L guard for dense J

// Activations and pre-activations of every layer for one sample.
struct ForwardTrace {
    std::vector<numkit::Vector> acts;     // acts[0] = input, acts[k+1] = layer k output
    std::vector<numkit::Vector> preacts;  // preacts[k] = z of layer k
};

std::size_t layer_offset(const std::vector<LayerSpec>& specs, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < layer; ++k) off += (specs[k].in_dim + 1) * specs[k].out_dim;
    return off;
}

void apply_activation(Activation act, const numkit::Vector& z, numkit::Vector& out) {
    const std::size_t n = z.size();
    out.resize(n);
    switch (act) {
        case Activation::Identity:
            out = z;
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-z[i]));
            break;
        case Activation::Softmax: {
            double zmax = z[0];
            for (double v : z) zmax = std::max(zmax, v);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = std::exp(z[i] - zmax);
                sum += out[i];
            }
            for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
            break;
        }
    }
}

void forward_sample(const Mlp& m, const double* x, ForwardTrace& trace) {
    const std::size_t depth = m.layers.size();
    trace.acts.resize(depth + 1);
    trace.preacts.resize(depth);
    trace.acts[0].assign(x, x + m.layers.front().in_dim);

    std::size_t off = 0;
    for (std::size_t k = 0; k < depth; ++k) {
        const LayerSpec& spec = m.layers[k];
        const numkit::Vector& in = trace.acts[k];
        numkit::Vector& z = trace.preacts[k];
        z.assign(spec.out_dim, 0.0);
        const double* W = m.weights.data() + off;
        const double* b = W + spec.in_dim * spec.out_dim;
        for (std::size_t o = 0; o < spec.out_dim; ++o) {
            const double* row = W + o * spec.in_dim;
            double s = b[o];
            for (std::size_t i = 0; i < spec.in_dim; ++i) s += row[i] * in[i];
            z[o] = s;
        }
        apply_activation(spec.activation, z, trace.acts[k + 1]);
        off += (spec.in_dim + 1) * spec.out_dim;
    }
}

// Pulls d(loss)/d(output activations) back through the net, accumulating the
// weight gradient into grad (length n). The softmax layer goes through its
// full Jacobian since the loss is least-squares over the activated outputs.
void backprop_sample(const Mlp& m, const ForwardTrace& trace, numkit::Vector da,
                     double* grad) {
    const std::size_t depth = m.layers.size();
    numkit::Vector dz;
    for (std::size_t k = depth; k-- > 0;) {
        const LayerSpec& spec = m.layers[k];
        const numkit::Vector& a = trace.acts[k + 1];
        const numkit::Vector& z = trace.preacts[k];
        dz.assign(spec.out_dim, 0.0);
        switch (spec.activation) {
            case Activation::Identity:
                dz = da;
                break;
            case Activation::Relu:
                for (std::size_t o = 0; o < spec.out_dim; ++o) dz[o] = z[o] > 0.0 ? da[o] : 0.0;
                break;
            case Activation::Sigmoid:
                for (std::size_t o = 0; o < spec.out_dim; ++o) dz[o] = da[o] * a[o] * (1.0 - a[o]);
                break;
            case Activation::Softmax: {
                double inner = 0.0;
                for (std::size_t o = 0; o < spec.out_dim; ++o) inner += da[o] * a[o];
                for (std::size_t o = 0; o < spec.out_dim; ++o) dz[o] = a[o] * (da[o] - inner);
                break;
            }
        }

        const std::size_t off = layer_offset(m.layers, k);
        double* Wg = grad + off;
        double* bg = Wg + spec.in_dim * spec.out_dim;
        const double* W = m.weights.data() + off;
        const numkit::Vector& in = trace.acts[k];
        for (std::size_t o = 0; o < spec.out_dim; ++o) {
            const double dzo = dz[o];
            double* wrow = Wg + o * spec.in_dim;
            for (std::size_t i = 0; i < spec.in_dim; ++i) wrow[i] += dzo * in[i];
            bg[o] += dzo;
        }
        if (k > 0) {
            da.assign(spec.in_dim, 0.0);
            for (std::size_t o = 0; o < spec.out_dim; ++o) {
                const double dzo = dz[o];
                if (dzo == 0.0) continue;
                const double* wrow = W + o * spec.in_dim;
                for (std::size_t i = 0; i < spec.in_dim; ++i) da[i] += wrow[i] * dzo;
            }
        }
    }
}

void require_batch_shapes(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y) {
    if (X.rows() == 0) throw DimensionError("empty batch");
    if (X.cols() != m.input_dim()) throw DimensionError("feature width does not match input_dim");
    if (Y.rows() != X.rows()) throw DimensionError("target row count does not match features");
    if (Y.cols() != m.output_dim()) throw DimensionError("target width does not match output_dim");
}

} // namespace

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softmax") return Activation::Softmax;
    throw ParseError("unknown activation: " + name);
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

std::size_t weight_count(const std::vector<LayerSpec>& specs) {
    return layer_offset(specs, specs.size());
}

void validate_specs(const std::vector<LayerSpec>& specs) {
    if (specs.empty()) throw DimensionError("empty layer list");
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (specs[k].in_dim < 1 || specs[k].out_dim < 1) {
            throw DimensionError("layer " + std::to_string(k) + " has a zero dimension");
        }
        if (k + 1 < specs.size()) {
            if (specs[k].out_dim != specs[k + 1].in_dim) {
                throw DimensionError("layer dims do not chain at layer " + std::to_string(k));
            }
            if (specs[k].activation == Activation::Softmax) {
                throw DimensionError("softmax only permitted as the final layer");
            }
        }
    }
}

Mlp init_weights(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
    validate_specs(specs);
    Mlp m;
    m.layers = specs;
    m.weights.assign(weight_count(specs), 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (const LayerSpec& spec : specs) {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
        for (std::size_t i = 0; i < spec.in_dim * spec.out_dim; ++i) {
            m.weights[off + i] = rng.uniform(-limit, limit);
        }
        // biases stay zero
        off += (spec.in_dim + 1) * spec.out_dim;
    }
    return m;
}

numkit::Matrix forward(const Mlp& m, const numkit::Matrix& X) {
    if (X.cols() != m.input_dim()) throw DimensionError("feature width does not match input_dim");
    numkit::Matrix out(X.rows(), m.output_dim());
    ForwardTrace trace;
    for (std::size_t s = 0; s < X.rows(); ++s) {
        forward_sample(m, &X.data()[s * X.cols()], trace);
        const numkit::Vector& pred = trace.acts.back();
        for (std::size_t c = 0; c < pred.size(); ++c) out(s, c) = pred[c];
    }
    return out;
}

BatchEval evaluate_batch(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y) {
    require_batch_shapes(m, X, Y);
    const std::size_t samples = X.rows();
    const std::size_t C = m.output_dim();
    const std::size_t L = samples * C;
    const std::size_t n = m.weight_count();

    BatchEval eval;
    eval.residuals.assign(L, 0.0);
    eval.gradient.assign(n, 0.0);

    ForwardTrace trace;
    numkit::Vector da(C);
    double loss_sum = 0.0;
    const double scale = 2.0 / static_cast<double>(L);
    for (std::size_t s = 0; s < samples; ++s) {
        forward_sample(m, &X.data()[s * X.cols()], trace);
        const numkit::Vector& pred = trace.acts.back();
        for (std::size_t c = 0; c < C; ++c) {
            const double r = pred[c] - Y(s, c);
            eval.residuals[s * C + c] = r;
            loss_sum += r * r;
            da[c] = scale * r;
        }
        backprop_sample(m, trace, da, eval.gradient.data());
    }
    eval.loss = loss_sum / static_cast<double>(L);
    return eval;
}

double mean_squared_loss(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y) {
    require_batch_shapes(m, X, Y);
    const numkit::Matrix pred = forward(m, X);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
        const double r = pred.data()[i] - Y.data()[i];
        loss_sum += r * r;
    }
    return loss_sum / static_cast<double>(pred.data().size());
}

numkit::Matrix exact_jacobian(const Mlp& m, const numkit::Matrix& X, const numkit::Matrix& Y) {
    require_batch_shapes(m, X, Y);
    const std::size_t samples = X.rows();
    const std::size_t C = m.output_dim();
    const std::size_t L = samples * C;
    const std::size_t n = m.weight_count();
    if (n * L > kJacobianCapacity) {
        throw CapacityError("exact_jacobian: n*L = " + std::to_string(n * L) +
                            " exceeds dense capacity");
    }

    numkit::Matrix J(n, L, 0.0);
    ForwardTrace trace;
    numkit::Vector column(n);
    numkit::Vector da(C);
    for (std::size_t s = 0; s < samples; ++s) {
        forward_sample(m, &X.data()[s * X.cols()], trace);
        for (std::size_t c = 0; c < C; ++c) {
            // d r_{s,c} / dw == d pred_{s,c} / dw; the target is constant.
            std::fill(da.begin(), da.end(), 0.0);
            da[c] = 1.0;
            std::fill(column.begin(), column.end(), 0.0);
            backprop_sample(m, trace, da, column.data());
            const std::size_t l = s * C + c;
            for (std::size_t i = 0; i < n; ++i) J(i, l) = column[i];
        }
    }
    return J;
}

} // namespace nlsq::model
