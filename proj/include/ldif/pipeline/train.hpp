#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ldif/data/dataset.hpp"
#include "ldif/nn/adam.hpp"
#include "ldif/nn/params.hpp"
#include "ldif/pipeline/config.hpp"

namespace ldif::pipeline {

/// Training checkpoint. Stored as one ParamSet file with the entries
///   fam/<name>        network weights
///   adam/...          optimizer moments and step (AdamState::export_to)
///   meta/fam          [layers, heads, width, D, D_id, A, T, ff_mult, time_additive, positional]
///   meta/schedule     [T, beta_start, beta_end]
///   meta/window       [window, stride]
///   train/epoch       [completed epochs]
struct Checkpoint {
    fam::FamConfig fam;
    int schedule_steps = 0;
    double beta_start = 0.0, beta_end = 0.0;
    std::size_t window = 0, stride = 0;
    std::size_t epoch = 0;
    nn::ParamSet params;
    nn::AdamState adam;
};

nn::ParamSet pack_checkpoint(const Checkpoint& ckpt);
/// Optimizer hyperparameters are not stored; `adam` supplies them.
Checkpoint unpack_checkpoint(const nn::ParamSet& stored, const nn::AdamConfig& adam = {});
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path, const nn::AdamConfig& adam = {});

/// Path of the checkpoint written after `epoch` epochs (epoch 0 is the
/// initialisation).
std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, std::size_t epoch);

struct TrainProgress {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double epoch_mean_loss = 0.0;
};

struct TrainOptions {
    /// Continue from the newest checkpoint in the run directory.
    bool resume = false;
    /// Called after every epoch.
    std::function<void(const TrainProgress&)> on_epoch;
};

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_curve;
    std::vector<double> step_losses;   // this invocation only
    std::vector<double> epoch_means;   // every epoch of the run, including resumed ones
    std::size_t steps = 0;             // Adam steps taken over the whole run
};

/// Mean noise loss and gradient over one batch of windows. Each window gets
/// its own tape; per-window gradients are summed in batch order whatever the
/// thread count, so the result is bit-identical for any `threads`.
struct BatchResult {
    double loss = 0.0;
    nn::Gradients grads;
};
BatchResult batch_gradient(const nn::ParamSet& params, const fam::FamConfig& fam,
                           const diffusion::NoiseSchedule& schedule, const std::vector<data::TrainingWindow>& windows,
                           std::uint64_t batch_seed, std::size_t threads);

/// Conditioning for one window of speaker frames.
fam::Conditioning window_conditioning(const data::TrainingWindow& window);

/// Runs `config.epochs` epochs of noise-loss Adam training on the batcher's
/// windows. Writes a checkpoint per epoch plus loss.tsv (step, epoch, loss)
/// into `run_dir`. Throws NumericalError on a non-finite loss.
TrainResult train(const RunConfig& config, const data::WindowBatcher& batcher, const std::filesystem::path& run_dir,
                  const TrainOptions& options = {});

}  // namespace ldif::pipeline
