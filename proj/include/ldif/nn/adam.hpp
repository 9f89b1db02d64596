#pragma once

#include <cstdint>

#include "ldif/nn/params.hpp"

namespace ldif::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void validate(const AdamConfig& config);

/// First/second moments per parameter plus the step counter.
class AdamState {
   public:
    AdamState() = default;
    AdamState(const ParamSet& params, AdamConfig config);

    const AdamConfig& config() const noexcept { return config_; }
    std::int64_t step() const noexcept { return step_; }
    const ParamSet& first_moment() const noexcept { return m_; }
    const ParamSet& second_moment() const noexcept { return v_; }

    /// Stores moments as "<prefix>m/<name>", "<prefix>v/<name>" and the step
    /// as "<prefix>step" so they can share a checkpoint with the weights.
    void export_to(ParamSet& out, const std::string& prefix) const;
    static AdamState import_from(const ParamSet& in, const std::string& prefix, const ParamSet& params,
                                 AdamConfig config);

   private:
    friend void adam_step(ParamSet&, const Gradients&, AdamState&, double);

    AdamConfig config_;
    ParamSet m_;
    ParamSet v_;
    std::int64_t step_ = 0;
};

/// One bias-corrected Adam update of every parameter. `lr_scale` multiplies
/// the configured learning rate (schedules).
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, double lr_scale = 1.0);

}  // namespace ldif::nn
