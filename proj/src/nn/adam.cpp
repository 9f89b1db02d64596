#include "ldif/nn/adam.hpp"

#include <cmath>

#include "ldif/error.hpp"

namespace ldif::nn {

void validate(const AdamConfig& c) {
    if (!(c.lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0, 1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0, 1)");
    if (!(c.eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

AdamState::AdamState(const ParamSet& params, AdamConfig config) : config_(config) {
    validate(config_);
    for (const auto& [name, value] : params) {
        m_.add(name, NumArray(value.shape()));
        v_.add(name, NumArray(value.shape()));
    }
}

void AdamState::export_to(ParamSet& out, const std::string& prefix) const {
    for (const auto& [name, value] : m_) out.add(prefix + "m/" + name, value);
    for (const auto& [name, value] : v_) out.add(prefix + "v/" + name, value);
    out.add(prefix + "step", NumArray::scalar(static_cast<double>(step_)));
}

AdamState AdamState::import_from(const ParamSet& in, const std::string& prefix, const ParamSet& params,
                                 AdamConfig config) {
    AdamState state(params, config);
    for (const auto& [name, _] : params) {
        state.m_.set(name, in.get(prefix + "m/" + name));
        state.v_.set(name, in.get(prefix + "v/" + name));
    }
    state.step_ = static_cast<std::int64_t>(in.get(prefix + "step")[0]);
    return state;
}

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, double lr_scale) {
    for (const auto& [name, _] : params) {
        if (!grads.count(name)) throw ConfigError("adam: missing gradient for parameter '" + name + "'");
        if (!state.m_.contains(name)) throw ConfigError("adam: no moment state for parameter '" + name + "'");
    }
    const AdamConfig& c = state.config_;
    ++state.step_;
    const double t = static_cast<double>(state.step_);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    const double lr = c.lr * lr_scale;
    for (const auto& [name, _] : params) {
        NumArray& p = params.get_mut(name);
        const NumArray& g = grads.at(name);
        if (g.size() != p.size()) {
            throw ShapeError("adam: gradient for '" + name + "' has shape " + shape_string(g.shape()) +
                             ", parameter has " + shape_string(p.shape()));
        }
        NumArray& m = state.m_.get_mut(name);
        NumArray& v = state.v_.get_mut(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

}  // namespace ldif::nn
