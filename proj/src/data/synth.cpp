#include "ldif/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ldif/error.hpp"

namespace ldif::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kResidualSigma = 0.02;
constexpr double kNoiseScale = 0.02;
constexpr double kIdentityScale = 0.05;

std::vector<double> smoothed_noise(Rng& rng, std::size_t n, std::size_t width, double scale) {
    std::vector<double> raw(n);
    for (double& v : raw) v = rng.normal();
    auto out = moving_average(raw, width);
    for (double& v : out) v *= scale;
    return out;
}

std::vector<double> clamped_walk(Rng& rng, std::size_t n, double step, double limit) {
    std::vector<double> out(n);
    double x = 0.0;
    for (auto& v : out) {
        x = std::clamp(x + step * rng.normal(), -limit, limit);
        v = x;
    }
    return moving_average(out, 3);
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& x, std::size_t width) {
    if (width == 0) throw ConfigError("moving_average: width must be positive");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
    std::vector<double> out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, i + half + 1);
        double total = 0.0;
        for (std::ptrdiff_t j = lo; j < hi; ++j) total += x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = total / static_cast<double>(hi - lo);
    }
    return out;
}

Listener draw_listener(Rng& rng, std::uint32_t id, const SequenceDims& dims) {
    Listener l;
    l.id = id;
    l.identity = NumArray({dims.identity_dim});
    for (double& v : l.identity.values()) v = rng.normal();
    return l;
}

std::vector<double> smoothed_energy(const DialoguePair& pair, const SynthConfig& config) {
    std::vector<double> energy(pair.length());
    for (std::size_t k = 0; k < energy.size(); ++k) energy[k] = pair.speaker_audio(k, 0);
    return moving_average(energy, config.energy_smoothing);
}

DialoguePair gen_pair(Rng& rng, std::size_t length, Attitude attitude, const Listener& listener,
                      const SynthConfig& config) {
    const SequenceDims& dims = config.dims;
    if (length < config.min_length) {
        throw DataError("gen_pair: length " + std::to_string(length) + " shorter than window " +
                        std::to_string(config.min_length));
    }
    if (listener.identity.size() != dims.identity_dim) throw ConfigError("gen_pair: identity dimension mismatch");
    if (dims.audio_dim < 1 || dims.expr_dim < 2) {
        throw ConfigError("gen_pair: need at least one audio channel and two expression channels");
    }

    const std::size_t n = length, d = dims.coeff_dim();
    DialoguePair pair;
    pair.dims = dims;
    pair.fps = config.fps;
    pair.attitude = attitude;
    pair.listener_id = listener.id;
    pair.identity = listener.identity;
    pair.speaker_motion = NumArray({n, d});
    pair.speaker_audio = NumArray({n, dims.audio_dim});
    pair.listener = NumArray({n, d});

    // Speaker audio: energy channel plus correlated noise channels.
    const double freq = rng.uniform(0.5, 2.0);
    std::vector<double> mix(dims.audio_dim);
    for (double& w : mix) w = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = kTwoPi * freq * static_cast<double>(k) / config.fps;
        const double a = config.energy_scale * std::abs(std::sin(phase)) + 0.1 * rng.normal();
        pair.speaker_audio(k, 0) = a;
        for (std::size_t j = 1; j < dims.audio_dim; ++j) pair.speaker_audio(k, j) = mix[j] * a + 0.5 * rng.normal();
    }

    // Speaker motion: smoothed clamped random walks.
    for (std::size_t c = 0; c < d; ++c) {
        const bool is_angle = c < SequenceDims::kAngleDim;
        const bool is_trans = c >= dims.trans_offset();
        const double step = is_angle ? 0.01 : (is_trans ? 0.005 : 0.02);
        const double limit = is_angle ? 0.5 : (is_trans ? 0.2 : 1.0);
        const auto walk = clamped_walk(rng, n, step, limit);
        for (std::size_t k = 0; k < n; ++k) pair.speaker_motion(k, c) = walk[k];
    }

    // Listener.
    const auto s = smoothed_energy(pair, config);
    for (std::size_t c = 0; c < d; ++c) {
        const auto base = smoothed_noise(rng, n, config.noise_smoothing, kNoiseScale);
        for (std::size_t k = 0; k < n; ++k) pair.listener(k, c) = base[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double time = static_cast<double>(k) / config.fps;
        switch (attitude) {
            case Attitude::positive:
                pair.listener(k, 0) += 0.15 * s[k] * std::sin(kTwoPi * 1.5 * time);
                pair.listener(k, dims.expr_offset() + 0) += 0.3;
                break;
            case Attitude::negative:
                pair.listener(k, 1) += 0.12 * s[k] * std::sin(kTwoPi * 1.0 * time);
                pair.listener(k, dims.expr_offset() + 1) -= 0.3;
                break;
            case Attitude::neutral:
                break;
        }
        for (std::size_t j = 0; j < dims.expr_dim; ++j) {
            pair.listener(k, dims.expr_offset() + j) += kIdentityScale * listener.identity[j % dims.identity_dim];
        }
        for (std::size_t c = 0; c < d; ++c) pair.listener(k, c) += kResidualSigma * rng.truncated_normal(3.0);
        for (std::size_t c = 0; c < SequenceDims::kAngleDim; ++c) {
            pair.listener(k, c) = std::clamp(pair.listener(k, c), -std::numbers::pi, std::numbers::pi);
        }
    }
    return pair;
}

}  // namespace ldif::data
