#include "ldif/fam/fam.hpp"

#include <cmath>

#include "ldif/error.hpp"

namespace ldif::fam {

using nn::BoundParams;
using nn::Tape;
using nn::Var;

void validate(const FamConfig& c) {
    if (c.layers == 0 || c.heads == 0 || c.width == 0 || c.coeff_dim == 0 || c.audio_dim == 0 || c.ff_mult == 0) {
        throw ConfigError("fam: layers, heads, width, coeff_dim, audio_dim and ff_mult must be positive");
    }
    if (c.identity_dim == 0) throw ConfigError("fam: identity dimension must be positive");
    if (c.steps < 1) throw ConfigError("fam: steps must be at least 1");
    if (c.width % c.heads != 0) {
        throw ConfigError("fam: width " + std::to_string(c.width) + " not divisible by " + std::to_string(c.heads) +
                          " heads");
    }
    if (c.width % 2 != 0) throw ConfigError("fam: width must be even for the sinusoidal embeddings");
}

std::size_t parameter_count(const FamConfig& c) {
    const std::size_t w = c.width, d = c.coeff_dim, ff = c.ff_mult * c.width;
    std::size_t total = 0;
    total += d * w + w;                         // input projection
    if (c.time_additive) total += w * w + w;    // additive time path
    total += (d + c.audio_dim) * w + w;         // speaker frame tokens
    total += kAttitudeCount * w + w;            // attitude token
    total += w * w + w;                         // time token
    const std::size_t spade = 2 * (c.identity_dim * w + w);
    const std::size_t attention = 4 * w * w + w + 2 * w;  // q, k, v, o + out bias + norm
    const std::size_t feed_forward = w * ff + ff + ff * w + w + 2 * w;
    total += c.layers * (spade + 2 * attention + feed_forward);
    total += w * d + d;  // output projection
    return total;
}

void validate(const Conditioning& cond, const FamConfig& config, std::size_t frames) {
    const auto& vis = cond.speaker_visual;
    const auto& aud = cond.speaker_audio;
    if (vis.rank() != 2 || aud.rank() != 2) throw DataError("conditioning: speaker streams must be rank 2");
    if (vis.rows() != aud.rows()) {
        throw DataError("conditioning: speaker visual has " + std::to_string(vis.rows()) + " frames but audio has " +
                        std::to_string(aud.rows()));
    }
    if (vis.rows() != frames) {
        throw DataError("conditioning: window has " + std::to_string(vis.rows()) + " speaker frames, latent has " +
                        std::to_string(frames));
    }
    if (vis.cols() != config.coeff_dim) {
        throw DataError("conditioning: speaker visual has " + std::to_string(vis.cols()) + " channels, expected " +
                        std::to_string(config.coeff_dim));
    }
    if (aud.cols() != config.audio_dim) {
        throw DataError("conditioning: speaker audio has " + std::to_string(aud.cols()) + " channels, expected " +
                        std::to_string(config.audio_dim));
    }
    if (cond.identity.size() != config.identity_dim) {
        throw DataError("conditioning: identity has " + std::to_string(cond.identity.size()) + " entries, expected " +
                        std::to_string(config.identity_dim));
    }
    double norm2 = 0.0;
    for (double v : cond.identity.values()) norm2 += v * v;
    if (!(norm2 > 0.0)) throw DataError("conditioning: identity vector has zero norm");
    if (cond.attitude.size() != kAttitudeCount) throw DataError("conditioning: attitude must have 3 entries");
    int ones = 0;
    for (double v : cond.attitude.values()) {
        if (v == 1.0) {
            ++ones;
        } else if (v != 0.0) {
            throw DataError("conditioning: attitude is not one-hot");
        }
    }
    if (ones != 1) throw DataError("conditioning: attitude is not one-hot");
    if (cond.t < 0 || cond.t > config.steps) {
        throw IndexError("conditioning: step " + std::to_string(cond.t) + " outside [0, " +
                         std::to_string(config.steps) + "]");
    }
}

NumArray embed_time(int t, std::size_t width) {
    if (width == 0 || width % 2 != 0) throw ConfigError("embed_time: width must be positive and even");
    if (t < 0) throw IndexError("embed_time: negative step " + std::to_string(t));
    NumArray out({width});
    for (std::size_t i = 0; i < width / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(width));
        out[2 * i] = std::sin(static_cast<double>(t) * freq);
        out[2 * i + 1] = std::cos(static_cast<double>(t) * freq);
    }
    return out;
}

namespace {

NumArray positions(std::size_t frames, std::size_t width) {
    NumArray out({frames, width});
    for (std::size_t f = 0; f < frames; ++f) {
        const NumArray row = embed_time(static_cast<int>(f), width);
        std::copy(row.data(), row.data() + width, out.data() + f * width);
    }
    return out;
}

void add_linear(nn::ParamSet& p, Rng& rng, const std::string& name, std::size_t in, std::size_t out,
                double bias = 0.0) {
    p.add(name + "/w", nn::glorot_uniform(rng, in, out));
    p.add(name + "/b", NumArray({out}, bias));
}

void add_attention(nn::ParamSet& p, Rng& rng, const std::string& name, std::size_t width) {
    p.add(name + "/wq", nn::glorot_uniform(rng, width, width));
    p.add(name + "/wk", nn::glorot_uniform(rng, width, width));
    p.add(name + "/wv", nn::glorot_uniform(rng, width, width));
    p.add(name + "/wo", nn::glorot_uniform(rng, width, width));
    p.add(name + "/bo", NumArray({width}));
}

void add_norm(nn::ParamSet& p, const std::string& name, std::size_t width) {
    p.add(name + "/scale", NumArray({width}, 1.0));
    p.add(name + "/shift", NumArray({width}));
}

nn::AttentionVars attention_vars(const BoundParams& p, const std::string& name) {
    return {p[name + "/wq"], p[name + "/wk"], p[name + "/wv"], p[name + "/wo"], p[name + "/bo"]};
}

Var residual_norm(Tape& tape, const BoundParams& p, const std::string& name, Var x, Var branch) {
    return nn::layer_norm(tape, nn::add(tape, x, branch), p[name + "/scale"], p[name + "/shift"]);
}

std::string layer_prefix(std::size_t i) { return "layer" + std::to_string(i) + "/"; }

}  // namespace

nn::ParamSet init_params(const FamConfig& c, Rng& rng) {
    validate(c);
    nn::ParamSet p;
    const std::size_t w = c.width;
    add_linear(p, rng, "in", c.coeff_dim, w);
    if (c.time_additive) add_linear(p, rng, "time_add", w, w);
    add_linear(p, rng, "mem/frame", c.coeff_dim + c.audio_dim, w);
    add_linear(p, rng, "mem/attitude", kAttitudeCount, w);
    add_linear(p, rng, "mem/time", w, w);
    for (std::size_t i = 0; i < c.layers; ++i) {
        const std::string pre = layer_prefix(i);
        add_linear(p, rng, pre + "spade/gamma", c.identity_dim, w, 1.0);
        add_linear(p, rng, pre + "spade/delta", c.identity_dim, w);
        add_attention(p, rng, pre + "self", w);
        add_norm(p, pre + "self_norm", w);
        add_attention(p, rng, pre + "cross", w);
        add_norm(p, pre + "cross_norm", w);
        add_linear(p, rng, pre + "ff/in", w, c.ff_mult * w);
        add_linear(p, rng, pre + "ff/out", c.ff_mult * w, w);
        add_norm(p, pre + "ff_norm", w);
    }
    // Zero output weights: the initial prediction is the (zero) bias, so
    // the first steps do not spend themselves shrinking a random output.
    p.add("out/w", NumArray({w, c.coeff_dim}));
    p.add("out/b", NumArray({c.coeff_dim}));
    return p;
}

void check_params(const nn::ParamSet& params, const FamConfig& config) {
    Rng rng(0);
    const nn::ParamSet expected = init_params(config, rng);
    for (const auto& [name, value] : expected) {
        if (!params.contains(name)) throw ConfigError("parameters are missing '" + name + "'");
        if (params.get(name).shape() != value.shape()) {
            throw ConfigError("parameter '" + name + "' has shape " + nn::shape_string(params.get(name).shape()) +
                              ", configuration implies " + nn::shape_string(value.shape()));
        }
    }
    if (params.size() != expected.size()) {
        throw ConfigError("parameter set has " + std::to_string(params.size()) + " entries, configuration implies " +
                          std::to_string(expected.size()));
    }
}

Var identity_enhance(Tape& tape, const BoundParams& p, const std::string& prefix, Var latent, Var identity,
                     std::size_t heads, FamTrace* trace) {
    if (tape.value(identity).empty()) throw ConfigError("identity_enhance: identity has zero dimension");
    Var gamma = nn::linear(tape, identity, p[prefix + "spade/gamma/w"], p[prefix + "spade/gamma/b"]);
    Var delta = nn::linear(tape, identity, p[prefix + "spade/delta/w"], p[prefix + "spade/delta/b"]);
    Var modulated = nn::layer_norm(tape, latent, gamma, delta);
    Var attended = nn::multi_head(tape, modulated, modulated, modulated, heads, attention_vars(p, prefix + "self"),
                                  trace ? &trace->attention_weights : nullptr);
    return residual_norm(tape, p, prefix + "self_norm", modulated, attended);
}

Var condition_encode(Tape& tape, const BoundParams& p, const Conditioning& cond, const FamConfig& config) {
    const std::size_t frames = cond.speaker_visual.rows();
    if (cond.speaker_audio.rows() != frames) {
        throw DataError("condition_encode: speaker visual has " + std::to_string(frames) + " frames, audio has " +
                        std::to_string(cond.speaker_audio.rows()));
    }
    const std::size_t dv = cond.speaker_visual.cols(), da = cond.speaker_audio.cols();
    NumArray joined({frames, dv + da});
    for (std::size_t f = 0; f < frames; ++f) {
        auto dst = joined.row(f);
        auto vis = cond.speaker_visual.row(f);
        auto aud = cond.speaker_audio.row(f);
        std::copy(vis.begin(), vis.end(), dst.begin());
        std::copy(aud.begin(), aud.end(), dst.begin() + static_cast<std::ptrdiff_t>(dv));
    }
    Var frame_tokens = nn::linear(tape, tape.constant(std::move(joined)), p["mem/frame/w"], p["mem/frame/b"]);
    Var attitude_token = nn::linear(tape, tape.constant(cond.attitude), p["mem/attitude/w"], p["mem/attitude/b"]);
    Var time_token =
        nn::linear(tape, tape.constant(embed_time(cond.t, config.width)), p["mem/time/w"], p["mem/time/b"]);
    const Var parts[] = {frame_tokens, attitude_token, time_token};
    return nn::concat_rows(tape, parts);
}

Var predict_noise(Tape& tape, const BoundParams& p, Var x_t, const Conditioning& cond, const FamConfig& config,
                  FamTrace* trace) {
    const NumArray& xv = tape.value(x_t);
    if (xv.rank() != 2 || xv.cols() != config.coeff_dim) {
        throw ShapeError("predict_noise: latent shape " + nn::shape_string(xv.shape()) + " does not match " +
                         std::to_string(config.coeff_dim) + " channels");
    }
    const std::size_t frames = xv.rows();
    validate(cond, config, frames);

    Var h = nn::linear(tape, x_t, p["in/w"], p["in/b"]);
    if (config.time_additive) {
        Var temb = nn::linear(tape, tape.constant(embed_time(cond.t, config.width)), p["time_add/w"], p["time_add/b"]);
        h = nn::add_row(tape, h, temb);
    }

    Var memory = condition_encode(tape, p, cond, config);
    if (config.positional) {
        Var pos = tape.constant(positions(frames, config.width));
        h = nn::add(tape, h, pos);
        NumArray mem_pos({frames + 2, config.width});
        const NumArray& frame_pos = tape.value(pos);
        std::copy(frame_pos.data(), frame_pos.data() + frame_pos.size(), mem_pos.data());
        memory = nn::add(tape, memory, tape.constant(std::move(mem_pos)));
    }

    Var identity = tape.constant(cond.identity);
    for (std::size_t i = 0; i < config.layers; ++i) {
        const std::string pre = layer_prefix(i);
        try {
            h = identity_enhance(tape, p, pre, h, identity, config.heads, trace);
            Var crossed = nn::multi_head(tape, h, memory, memory, config.heads, attention_vars(p, pre + "cross"),
                                         trace ? &trace->attention_weights : nullptr);
            h = residual_norm(tape, p, pre + "cross_norm", h, crossed);
            Var hidden = nn::gelu(tape, nn::linear(tape, h, p[pre + "ff/in/w"], p[pre + "ff/in/b"]));
            Var ff = nn::linear(tape, hidden, p[pre + "ff/out/w"], p[pre + "ff/out/b"]);
            h = residual_norm(tape, p, pre + "ff_norm", h, ff);
        } catch (const Error& e) {
            throw Error(e.kind(), "layer " + std::to_string(i) + ": " + e.what());
        }
    }
    return nn::linear(tape, h, p["out/w"], p["out/b"]);
}

NumArray predict_noise(const nn::ParamSet& params, const NumArray& x_t, const Conditioning& cond,
                       const FamConfig& config, FamTrace* trace) {
    Tape tape;
    BoundParams bound(tape, params, false);
    return tape.value(predict_noise(tape, bound, tape.constant(x_t), cond, config, trace));
}

}  // namespace ldif::fam
