#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ldif/nn/array.hpp"
#include "ldif/nn/ops.hpp"
#include "ldif/nn/params.hpp"
#include "ldif/nn/tape.hpp"
#include "ldif/rng.hpp"

namespace ldif::fam {

using nn::NumArray;

inline constexpr std::size_t kAttitudeCount = 3;

struct FamConfig {
    std::size_t layers = 4;
    std::size_t heads = 8;
    std::size_t width = 64;
    std::size_t coeff_dim = 14;     // D: channels per latent frame
    std::size_t identity_dim = 32;  // D_id
    std::size_t audio_dim = 45;
    int steps = 50;                 // T, largest valid diffusion step
    std::size_t ff_mult = 4;        // feed-forward hidden width = ff_mult × width
    /// Add a projected time embedding to the latent tokens in addition to the
    /// time memory token.
    bool time_additive = true;
    /// Add sinusoidal frame-position encodings to latent tokens and to the
    /// speaker frame tokens of the memory.
    bool positional = true;
};

void validate(const FamConfig& config);

/// Number of scalar parameters for a configuration; see README for the formula.
std::size_t parameter_count(const FamConfig& config);

/// Listener-side conditioning for one window.
struct Conditioning {
    NumArray speaker_visual;  // [L, D]
    NumArray speaker_audio;   // [L, audio_dim]
    NumArray identity;        // [D_id]
    NumArray attitude;        // one-hot [3]: positive, neutral, negative
    int t = 0;
};

/// Checks internal consistency (stream lengths, one-hot attitude, nonzero
/// identity) and agreement with `config` and the latent length `frames`.
void validate(const Conditioning& cond, const FamConfig& config, std::size_t frames);

/// Interleaved sinusoidal embedding [sin(t/10000^(2i/w)), cos(t/10000^(2i/w))]_i.
NumArray embed_time(int t, std::size_t width);

/// Attention matrices captured during a forward pass, in evaluation order.
struct FamTrace {
    std::vector<NumArray> attention_weights;
};

/// Initial parameters: Glorot-uniform weights, zero biases, unit norm scales,
/// a unit bias on every identity γ projection and a zero output projection.
nn::ParamSet init_params(const FamConfig& config, Rng& rng);

/// γ ⊙ LayerNorm(latent) + δ with (γ, δ) projected from the identity vector,
/// followed by multi-head self-attention with residual and LayerNorm.
/// `prefix` selects the layer's parameters, e.g. "layer0/".
nn::Var identity_enhance(nn::Tape& tape, const nn::BoundParams& params, const std::string& prefix, nn::Var latent,
                         nn::Var identity, std::size_t heads, FamTrace* trace = nullptr);

/// Cross-attention memory: one token per speaker frame, then an attitude
/// token, then a time token (L + 2 rows).
nn::Var condition_encode(nn::Tape& tape, const nn::BoundParams& params, const Conditioning& cond,
                         const FamConfig& config);

/// ε̂(x_t, t, conditioning) as a [L, D] tape value.
nn::Var predict_noise(nn::Tape& tape, const nn::BoundParams& params, nn::Var x_t, const Conditioning& cond,
                      const FamConfig& config, FamTrace* trace = nullptr);

/// Inference-only convenience: evaluates ε̂ without recording gradients.
NumArray predict_noise(const nn::ParamSet& params, const NumArray& x_t, const Conditioning& cond,
                       const FamConfig& config, FamTrace* trace = nullptr);

/// Checks that `params` has exactly the names and shapes `config` implies.
void check_params(const nn::ParamSet& params, const FamConfig& config);

}  // namespace ldif::fam
