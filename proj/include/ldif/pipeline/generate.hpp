#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldif/data/sequence.hpp"
#include "ldif/diffusion/diffusion.hpp"
#include "ldif/fam/fam.hpp"
#include "ldif/pipeline/train.hpp"

namespace ldif::pipeline {

using nn::NumArray;

/// A trained (or initial) noise predictor ready for sampling.
struct Model {
    fam::FamConfig fam;
    diffusion::NoiseSchedule schedule{1, 0.5, 0.5};
    nn::ParamSet params;
    std::size_t window = 40;
    std::size_t stride = 20;
    /// 16 hex digits of FNV-1a over the checkpoint bytes.
    std::string id;

    static Model from_checkpoint(const Checkpoint& ckpt);
    static Model load(const std::filesystem::path& path);

    /// ConfigError when the model's channel layout differs from `dims`.
    void check_compatible(const data::SequenceDims& dims) const;
};

struct SampleRun {
    NumArray listener;  // [n, D], same length as the speaker sequence
    data::Attitude attitude = data::Attitude::neutral;
    std::uint64_t seed = 0;  // sub-seed of this sample
    std::string checkpoint_id;
    double seconds = 0.0;  // wall-clock time spent on this sample's windows
};

struct GenerateOptions {
    bool deterministic = false;
    std::size_t threads = 1;
};

/// Samples `n_samples` listener sequences for the speaker streams of `speaker`.
/// The speaker sequence is split into windows, each window is sampled
/// independently from its own speaker frames and the shared identity and
/// attitude, and the windows are crossfaded. Angle channels are clamped to
/// [−π, π] after stitching. Sample i uses the sub-seed
/// derive_seed(seed, "sample/i") and window w of it the stream
/// "window/w" below that.
std::vector<SampleRun> generate(const Model& model, const data::DialoguePair& speaker, const NumArray& identity,
                                data::Attitude attitude, std::size_t n_samples, std::uint64_t seed,
                                const GenerateOptions& options = {});

/// One reverse-diffusion chain for a single window of conditioning.
NumArray sample_window(const Model& model, const fam::Conditioning& cond, Rng& rng, bool deterministic);

}  // namespace ldif::pipeline
