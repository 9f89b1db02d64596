#include "ldif/pipeline/generate.hpp"

#include <algorithm>
#include <chrono>
#include <numbers>
#include <cstdio>
#include <thread>

#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"
#include "ldif/pipeline/windows.hpp"

namespace ldif::pipeline {

using nn::NumArray;

Model Model::from_checkpoint(const Checkpoint& ckpt) {
    Model m;
    m.fam = ckpt.fam;
    m.schedule = diffusion::NoiseSchedule(ckpt.schedule_steps, ckpt.beta_start, ckpt.beta_end);
    m.params = ckpt.params;
    m.window = ckpt.window;
    m.stride = ckpt.stride;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(nn::serialize(pack_checkpoint(ckpt)))));
    m.id = buf;
    return m;
}

Model Model::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("checkpoint '" + path.string() + "' not found; run train first");
    }
    return from_checkpoint(unpack_checkpoint(nn::deserialize(data::read_file(path))));
}

void Model::check_compatible(const data::SequenceDims& dims) const {
    if (fam.coeff_dim != dims.coeff_dim() || fam.identity_dim != dims.identity_dim || fam.audio_dim != dims.audio_dim) {
        throw ConfigError("checkpoint expects D=" + std::to_string(fam.coeff_dim) +
                          " D_id=" + std::to_string(fam.identity_dim) + " A=" + std::to_string(fam.audio_dim) +
                          " but the input has D=" + std::to_string(dims.coeff_dim()) +
                          " D_id=" + std::to_string(dims.identity_dim) + " A=" + std::to_string(dims.audio_dim));
    }
}

NumArray sample_window(const Model& model, const fam::Conditioning& cond, Rng& rng, bool deterministic) {
    fam::Conditioning c = cond;
    const diffusion::Predictor predictor = [&](const NumArray& x_t, int t) {
        c.t = t;
        return fam::predict_noise(model.params, x_t, c, model.fam);
    };
    diffusion::SampleOptions options;
    options.deterministic = deterministic;
    return diffusion::sample(predictor, {cond.speaker_visual.rows(), model.fam.coeff_dim}, model.schedule, rng,
                             options);
}

std::vector<SampleRun> generate(const Model& model, const data::DialoguePair& speaker, const NumArray& identity,
                                data::Attitude attitude, std::size_t n_samples, std::uint64_t seed,
                                const GenerateOptions& options) {
    model.check_compatible(speaker.dims);
    if (n_samples == 0) throw ConfigError("generate: at least one sample required");
    const std::size_t length = speaker.speaker_motion.rows();
    const auto starts = split_windows(length, model.window, model.stride);

    struct Task {
        std::size_t sample, window;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (std::size_t w = 0; w < starts.size(); ++w) tasks.push_back({i, w});
    }
    std::vector<NumArray> clips(tasks.size());
    std::vector<double> seconds(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());

    auto run_task = [&](std::size_t k) {
        try {
            const auto begin = std::chrono::steady_clock::now();
            const Task& task = tasks[k];
            fam::Conditioning cond;
            cond.speaker_visual = speaker.speaker_motion.slice_rows(starts[task.window], model.window);
            cond.speaker_audio = speaker.speaker_audio.slice_rows(starts[task.window], model.window);
            cond.identity = identity;
            cond.attitude = data::one_hot(attitude);
            Rng rng = Rng(derive_seed(seed, "sample/" + std::to_string(task.sample)))
                          .derive("window/" + std::to_string(task.window));
            clips[k] = sample_window(model, cond, rng, options.deterministic);
            seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, tasks.size()));
    if (workers == 1) {
        for (std::size_t k = 0; k < tasks.size(); ++k) run_task(k);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < tasks.size(); k += workers) run_task(k);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<SampleRun> runs(n_samples);
    const std::size_t per_sample = starts.size();
    for (std::size_t i = 0; i < n_samples; ++i) {
        std::vector<NumArray> sample_clips(clips.begin() + static_cast<std::ptrdiff_t>(i * per_sample),
                                           clips.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_sample));
        SampleRun& run = runs[i];
        run.listener = stitch_windows(sample_clips, starts, length);
        for (std::size_t k = 0; k < length; ++k) {
            for (std::size_t c = 0; c < data::SequenceDims::kAngleDim; ++c) {
                run.listener(k, c) = std::clamp(run.listener(k, c), -std::numbers::pi, std::numbers::pi);
            }
        }
        run.attitude = attitude;
        run.seed = derive_seed(seed, "sample/" + std::to_string(i));
        run.checkpoint_id = model.id;
        for (std::size_t w = 0; w < per_sample; ++w) run.seconds += seconds[i * per_sample + w];
    }
    return runs;
}

}  // namespace ldif::pipeline
