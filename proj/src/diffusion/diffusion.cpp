#include "ldif/diffusion/diffusion.hpp"

#include <cmath>

#include "ldif/error.hpp"
#include "ldif/nn/ops.hpp"

namespace ldif::diffusion {

NoiseSchedule::NoiseSchedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw ConfigError("schedule: step count must be at least 1, got " + std::to_string(steps));
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1, got [" + std::to_string(beta_start) + ", " +
                          std::to_string(beta_end) + "]");
    }
    beta_.resize(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
        beta_[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
    }
    fill_tables();
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
    if (beta_.empty()) throw ConfigError("schedule: empty beta table");
    for (double b : beta_) {
        if (!(b > 0.0 && b < 1.0)) throw ConfigError("schedule: every beta must lie in (0, 1)");
    }
    fill_tables();
}

void NoiseSchedule::fill_tables() {
    const std::size_t n = beta_.size();
    alpha_.resize(n);
    alpha_bar_.resize(n);
    sigma_.resize(n);
    double running = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        alpha_[i] = 1.0 - beta_[i];
        running *= alpha_[i];
        alpha_bar_[i] = running;
        sigma_[i] = std::sqrt(beta_[i]);
    }
}

std::size_t NoiseSchedule::index(int t) const {
    if (t < 1 || t > steps()) {
        throw IndexError("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
    }
    return static_cast<std::size_t>(t - 1);
}

NumArray standard_normal(Rng& rng, const nn::Shape& shape) {
    NumArray out(shape);
    for (double& v : out.values()) v = rng.normal();
    return out;
}

namespace {

void require_same(const char* op, const NumArray& a, const NumArray& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape " + nn::shape_string(a.shape()) + " vs " +
                         nn::shape_string(b.shape()));
    }
}

}  // namespace

NumArray forward_sample(const NumArray& x0, int t, const NumArray& eps, const NoiseSchedule& schedule) {
    require_same("forward_sample", x0, eps);
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    NumArray out(x0.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

NumArray forward_step(const NumArray& x_prev, int t, const NumArray& z, const NoiseSchedule& schedule) {
    require_same("forward_step", x_prev, z);
    const double keep = std::sqrt(1.0 - schedule.beta(t)), spread = std::sqrt(schedule.beta(t));
    NumArray out(x_prev.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * x_prev[i] + spread * z[i];
    return out;
}

NumArray reverse_step(const NumArray& x_t, int t, const NumArray& eps_hat, const NoiseSchedule& schedule,
                      const NumArray& z) {
    require_same("reverse_step", x_t, eps_hat);
    require_same("reverse_step", x_t, z);
    const double alpha = schedule.alpha(t);
    const double coef = (1.0 - alpha) / std::sqrt(1.0 - schedule.alpha_bar(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double sigma = schedule.sigma(t);
    NumArray out(x_t.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = inv_sqrt_alpha * (x_t[i] - coef * eps_hat[i]) + sigma * z[i];
    }
    return out;
}

NoiseDraw draw_noise(Rng& rng, const nn::Shape& shape, const NoiseSchedule& schedule) {
    NoiseDraw draw;
    draw.t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
    draw.eps = standard_normal(rng, shape);
    return draw;
}

nn::Var noise_loss(nn::Tape& tape, const TapePredictor& predictor, const NumArray& x0, const NoiseDraw& draw,
                   const NoiseSchedule& schedule) {
    NumArray x_t = forward_sample(x0, draw.t, draw.eps, schedule);
    nn::Var eps_hat = predictor(tape, tape.constant(std::move(x_t)), draw.t);
    return nn::mse(tape, eps_hat, draw.eps);
}

nn::Var noise_loss(nn::Tape& tape, const TapePredictor& predictor, const NumArray& x0, const NoiseSchedule& schedule,
                   Rng& rng) {
    return noise_loss(tape, predictor, x0, draw_noise(rng, x0.shape(), schedule), schedule);
}

NumArray sample(const Predictor& predictor, const nn::Shape& shape, const NoiseSchedule& schedule, Rng& rng,
                const SampleOptions& options) {
    NumArray x = options.deterministic ? NumArray(shape) : standard_normal(rng, shape);
    const NumArray zero(shape);
    for (int t = schedule.steps(); t >= 1; --t) {
        NumArray eps_hat = predictor(x, t);
        if (eps_hat.shape() != shape) {
            throw ShapeError("sample: predictor returned " + nn::shape_string(eps_hat.shape()) + ", expected " +
                             nn::shape_string(shape));
        }
        if (t > 1 && !options.deterministic) {
            x = reverse_step(x, t, eps_hat, schedule, standard_normal(rng, shape));
        } else {
            x = reverse_step(x, t, eps_hat, schedule, zero);
        }
    }
    return x;
}

}  // namespace ldif::diffusion
