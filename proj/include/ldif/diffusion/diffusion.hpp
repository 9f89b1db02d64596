#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ldif/nn/array.hpp"
#include "ldif/nn/tape.hpp"
#include "ldif/rng.hpp"

namespace ldif::diffusion {

using nn::NumArray;

/// Linear variance schedule with derived tables. Steps are 1-based:
/// valid t is 1..steps().
class NoiseSchedule {
   public:
    /// beta linearly interpolated from beta_start (t = 1) to beta_end (t = T).
    NoiseSchedule(int steps, double beta_start, double beta_end);
    /// Explicit beta table, beta[0] being step 1.
    explicit NoiseSchedule(std::vector<double> betas);

    int steps() const noexcept { return static_cast<int>(beta_.size()); }
    double beta_start() const noexcept { return beta_.front(); }
    double beta_end() const noexcept { return beta_.back(); }

    double beta(int t) const { return beta_[index(t)]; }
    double alpha(int t) const { return alpha_[index(t)]; }
    double alpha_bar(int t) const { return alpha_bar_[index(t)]; }
    /// Reverse-step standard deviation, √beta_t.
    double sigma(int t) const { return sigma_[index(t)]; }

   private:
    std::size_t index(int t) const;
    void fill_tables();

    std::vector<double> beta_, alpha_, alpha_bar_, sigma_;
};

/// A window of frames × channels at diffusion step t (t = 0 is clean data).
struct LatentState {
    NumArray x;
    int t = 0;
};

NumArray standard_normal(Rng& rng, const nn::Shape& shape);

/// √ᾱ_t·x0 + √(1−ᾱ_t)·eps
NumArray forward_sample(const NumArray& x0, int t, const NumArray& eps, const NoiseSchedule& schedule);

/// One step of the forward kernel q(x_t | x_{t−1}): √(1−β_t)·x + √β_t·z.
NumArray forward_step(const NumArray& x_prev, int t, const NumArray& z, const NoiseSchedule& schedule);

/// μ(x_t) + σ_t·z with μ = (x_t − (1−α_t)/√(1−ᾱ_t)·ε̂) / √α_t.
NumArray reverse_step(const NumArray& x_t, int t, const NumArray& eps_hat, const NoiseSchedule& schedule,
                      const NumArray& z);

/// Noise predictor recorded on a tape, used for training.
using TapePredictor = std::function<nn::Var(nn::Tape&, nn::Var x_t, int t)>;
/// Plain noise predictor, used for sampling.
using Predictor = std::function<NumArray(const NumArray& x_t, int t)>;

struct NoiseDraw {
    int t = 1;
    NumArray eps;
};

/// t ~ U{1..T}, ε ~ N(0, I) of the given shape.
NoiseDraw draw_noise(Rng& rng, const nn::Shape& shape, const NoiseSchedule& schedule);

/// ‖ε − ε̂(x_t, t)‖² averaged over coordinates, for a given draw. The loss is
/// recorded on `tape`; call tape.backward() on it for parameter gradients.
nn::Var noise_loss(nn::Tape& tape, const TapePredictor& predictor, const NumArray& x0, const NoiseDraw& draw,
                   const NoiseSchedule& schedule);
/// Same, drawing (t, ε) from `rng`.
nn::Var noise_loss(nn::Tape& tape, const TapePredictor& predictor, const NumArray& x0, const NoiseSchedule& schedule,
                   Rng& rng);

struct SampleOptions {
    /// Start from x_T = 0 and skip the per-step noise. Removes all sampling
    /// randomness; used as a deterministic regression-style baseline.
    bool deterministic = false;
};

/// Ancestral sampling: x_T ~ N(0, I), then reverse_step for t = T..1 with
/// fresh z ~ N(0, I) for t > 1 and z = 0 at t = 1.
NumArray sample(const Predictor& predictor, const nn::Shape& shape, const NoiseSchedule& schedule, Rng& rng,
                const SampleOptions& options = {});

}  // namespace ldif::diffusion
