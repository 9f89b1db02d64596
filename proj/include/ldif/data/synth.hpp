#pragma once

#include <cstdint>

#include "ldif/data/sequence.hpp"
#include "ldif/rng.hpp"

namespace ldif::data {

/// Parameters of the synthetic speaker/listener law.
///
/// Speaker: energy a(k) = energy_scale·|sin(2πf·k/fps)| + 0.1·n(k), f ~ U(0.5, 2) Hz,
/// in audio channel 0; the other audio channels mix a(k) with noise. Head
/// angles are a clamped, smoothed random walk.
///
/// Listener, with s(k) = smooth(a)(k):
///   positive: pitch += 0.15·s(k)·sin(2π·1.5·k/fps), expression[0] += 0.3
///   negative: yaw   += 0.12·s(k)·sin(2π·1.0·k/fps), expression[1] −= 0.3
///   neutral:  no attitude term
/// Every channel also gets 0.02-scale smoothed noise and a Gaussian residual
/// (σ = 0.02, truncated at 3σ); expression channels get the listener's fixed
/// identity offset 0.05·identity[j mod D_id].
struct SynthConfig {
    SequenceDims dims;
    double fps = 30.0;
    std::size_t min_length = 40;
    double energy_scale = 1.0;
    /// Centered moving-average width used for s(k).
    std::size_t energy_smoothing = 3;
    /// Centered moving-average width used for the smoothed noise terms.
    std::size_t noise_smoothing = 9;
};

struct Listener {
    std::uint32_t id = 0;
    NumArray identity;  // [D_id]
};

/// Identity vector with i.i.d. standard normal entries.
Listener draw_listener(Rng& rng, std::uint32_t id, const SequenceDims& dims);

DialoguePair gen_pair(Rng& rng, std::size_t length, Attitude attitude, const Listener& listener,
                      const SynthConfig& config);

/// Centered moving average, truncated at the edges.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t width);

/// The smoothed speaker energy s(k) the listener law is driven by.
std::vector<double> smoothed_energy(const DialoguePair& pair, const SynthConfig& config);

}  // namespace ldif::data
