#include "ldif/pipeline/checks.hpp"

#include "ldif/diffusion/diffusion.hpp"
#include "ldif/nn/ops.hpp"

namespace ldif::pipeline {

using nn::NumArray;

fam::FamConfig tiny_fam_config() {
    fam::FamConfig c;
    c.layers = 2;
    c.heads = 2;
    c.width = 16;
    c.coeff_dim = 3;
    c.identity_dim = 8;
    c.audio_dim = 45;
    c.steps = 50;
    return c;
}

nn::GradCheckResult fam_grad_check(const fam::FamConfig& config, std::size_t frames, std::uint64_t seed,
                                   double step) {
    const Rng master(seed);
    Rng init = master.derive("params");
    const nn::ParamSet params = fam::init_params(config, init);
    // Random output weights so the check does not start at the zero-output
    // initialisation, where half of the gradients vanish identically.
    nn::ParamSet perturbed = params;
    perturbed.set("out/w", nn::glorot_uniform(init, config.width, config.coeff_dim));

    Rng data = master.derive("window");
    fam::Conditioning cond;
    cond.speaker_visual = diffusion::standard_normal(data, {frames, config.coeff_dim});
    cond.speaker_audio = diffusion::standard_normal(data, {frames, config.audio_dim});
    cond.identity = diffusion::standard_normal(data, {config.identity_dim});
    cond.attitude = NumArray::vector({0.0, 0.0, 0.0});
    cond.attitude[static_cast<std::size_t>(data.uniform_int(0, 2))] = 1.0;
    const diffusion::NoiseSchedule schedule(config.steps, 1e-3, 0.05);
    const NumArray x0 = diffusion::standard_normal(data, {frames, config.coeff_dim});
    const diffusion::NoiseDraw draw = diffusion::draw_noise(data, x0.shape(), schedule);

    const nn::ScalarFn loss = [&](nn::Tape& tape, const nn::BoundParams& p) {
        fam::Conditioning c = cond;
        const diffusion::TapePredictor predictor = [&](nn::Tape& tp, nn::Var x_t, int t) {
            c.t = t;
            return fam::predict_noise(tp, p, x_t, c, config);
        };
        return diffusion::noise_loss(tape, predictor, x0, draw, schedule);
    };
    nn::GradCheckOptions options;
    options.step = step;
    options.seed = derive_seed(seed, "coordinates");
    return nn::grad_check(loss, perturbed, options);
}

}  // namespace ldif::pipeline
