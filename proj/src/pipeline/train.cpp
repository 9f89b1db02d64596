#include "ldif/pipeline/train.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"

namespace fs = std::filesystem;

namespace ldif::pipeline {

using nn::NumArray;

namespace {

const std::string kFam = "fam/";
const std::string kAdam = "adam/";

NumArray meta_fam(const fam::FamConfig& c) {
    return NumArray::vector({double(c.layers), double(c.heads), double(c.width), double(c.coeff_dim),
                             double(c.identity_dim), double(c.audio_dim), double(c.steps), double(c.ff_mult),
                             c.time_additive ? 1.0 : 0.0, c.positional ? 1.0 : 0.0});
}

const NumArray& meta(const nn::ParamSet& stored, const std::string& name, std::size_t size) {
    if (!stored.contains(name)) throw DataError("checkpoint lacks '" + name + "'");
    const NumArray& v = stored.get(name);
    if (v.size() != size) throw DataError("checkpoint entry '" + name + "' has the wrong size");
    return v;
}

std::string format_loss(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

nn::ParamSet pack_checkpoint(const Checkpoint& ckpt) {
    nn::ParamSet out;
    for (const auto& [name, value] : ckpt.params) out.add(kFam + name, value);
    ckpt.adam.export_to(out, kAdam);
    out.add("meta/fam", meta_fam(ckpt.fam));
    out.add("meta/schedule", NumArray::vector({double(ckpt.schedule_steps), ckpt.beta_start, ckpt.beta_end}));
    out.add("meta/window", NumArray::vector({double(ckpt.window), double(ckpt.stride)}));
    out.add("train/epoch", NumArray::vector({double(ckpt.epoch)}));
    return out;
}

Checkpoint unpack_checkpoint(const nn::ParamSet& stored, const nn::AdamConfig& adam) {
    Checkpoint c;
    const NumArray& f = meta(stored, "meta/fam", 10);
    auto sz = [](double v) { return static_cast<std::size_t>(v); };
    c.fam.layers = sz(f[0]);
    c.fam.heads = sz(f[1]);
    c.fam.width = sz(f[2]);
    c.fam.coeff_dim = sz(f[3]);
    c.fam.identity_dim = sz(f[4]);
    c.fam.audio_dim = sz(f[5]);
    c.fam.steps = static_cast<int>(f[6]);
    c.fam.ff_mult = sz(f[7]);
    c.fam.time_additive = f[8] != 0.0;
    c.fam.positional = f[9] != 0.0;
    const NumArray& s = meta(stored, "meta/schedule", 3);
    c.schedule_steps = static_cast<int>(s[0]);
    c.beta_start = s[1];
    c.beta_end = s[2];
    const NumArray& w = meta(stored, "meta/window", 2);
    c.window = sz(w[0]);
    c.stride = sz(w[1]);
    c.epoch = sz(meta(stored, "train/epoch", 1)[0]);
    for (const auto& [name, value] : stored) {
        if (name.starts_with(kFam)) c.params.add(name.substr(kFam.size()), value);
    }
    try {
        fam::check_params(c.params, c.fam);
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint is inconsistent with its own configuration: ") + e.what());
    }
    c.adam = nn::AdamState::import_from(stored, kAdam, c.params, adam);
    return c;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) { nn::save_params(path, pack_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const fs::path& path, const nn::AdamConfig& adam) {
    if (!fs::exists(path)) throw DataError("checkpoint '" + path.string() + "' not found; run train first");
    return unpack_checkpoint(nn::load_params(path), adam);
}

fs::path checkpoint_path(const fs::path& run_dir, std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch-%04zu.ckpt", epoch);
    return run_dir / buf;
}

fam::Conditioning window_conditioning(const data::TrainingWindow& window) {
    fam::Conditioning cond;
    cond.speaker_visual = window.speaker_motion;
    cond.speaker_audio = window.speaker_audio;
    cond.identity = window.identity;
    cond.attitude = data::one_hot(window.attitude);
    return cond;
}

BatchResult batch_gradient(const nn::ParamSet& params, const fam::FamConfig& fam,
                           const diffusion::NoiseSchedule& schedule, const std::vector<data::TrainingWindow>& windows,
                           std::uint64_t batch_seed, std::size_t threads) {
    if (windows.empty()) throw DataError("batch_gradient: empty batch");
    const std::size_t n = windows.size();
    std::vector<double> losses(n);
    std::vector<nn::Gradients> grads(n);
    std::vector<std::exception_ptr> errors(n);

    auto run_one = [&](std::size_t i) {
        try {
            Rng rng(derive_seed(batch_seed, "window/" + std::to_string(i)));
            fam::Conditioning cond = window_conditioning(windows[i]);
            nn::Tape tape;
            nn::BoundParams bound(tape, params);
            diffusion::TapePredictor predictor = [&](nn::Tape& tp, nn::Var x_t, int t) {
                cond.t = t;
                return fam::predict_noise(tp, bound, x_t, cond, fam);
            };
            nn::Var loss = diffusion::noise_loss(tape, predictor, windows[i].listener, schedule, rng);
            tape.backward(loss);
            losses[i] = tape.value(loss)[0];
            grads[i] = bound.gradients(tape);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    const std::size_t workers = std::min(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    // Fixed reduction order: window 0, 1, ..., n-1.
    BatchResult out;
    out.grads = std::move(grads[0]);
    out.loss = losses[0];
    for (std::size_t i = 1; i < n; ++i) {
        out.loss += losses[i];
        for (auto& [name, g] : out.grads) {
            const NumArray& gi = grads[i].at(name);
            for (std::size_t k = 0; k < g.size(); ++k) g[k] += gi[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss *= inv;
    for (auto& [name, g] : out.grads) {
        for (double& v : g.values()) v *= inv;
    }
    return out;
}

namespace {

struct LossRow {
    std::size_t step, epoch;
    double loss;
};

std::vector<LossRow> read_loss_rows(const fs::path& path, std::size_t max_epoch) {
    std::vector<LossRow> rows;
    if (!fs::exists(path)) return rows;
    std::istringstream in(data::read_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream f(line);
        LossRow r{};
        std::string loss;
        if (!(f >> r.step >> r.epoch >> loss)) throw DataError(path.string() + ": malformed row '" + line + "'");
        std::from_chars(loss.data(), loss.data() + loss.size(), r.loss);
        if (r.epoch <= max_epoch) rows.push_back(r);
    }
    return rows;
}

void write_loss_rows(const fs::path& path, const std::vector<LossRow>& rows) {
    std::string out = "step\tepoch\tloss\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step) + '\t' + std::to_string(r.epoch) + '\t' + format_loss(r.loss) + '\n';
    }
    data::write_file(path, out);
}

std::size_t newest_epoch(const fs::path& run_dir) {
    std::size_t best = 0;
    bool found = false;
    if (fs::exists(run_dir)) {
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            const std::string name = entry.path().filename().string();
            unsigned e = 0;
            if (std::sscanf(name.c_str(), "epoch-%u.ckpt", &e) == 1 && name == checkpoint_path("", e).string()) {
                if (!found || e > best) best = e;
                found = true;
            }
        }
    }
    if (!found) throw DataError("no checkpoint to resume from in '" + run_dir.string() + "'");
    return best;
}

void require_same_model(const Checkpoint& c, const RunConfig& config) {
    const fam::FamConfig want = config.fam_config();
    if (meta_fam(c.fam) != meta_fam(want) || c.schedule_steps != config.schedule_steps ||
        c.beta_start != config.beta_start || c.beta_end != config.beta_end || c.window != config.window ||
        c.stride != config.stride) {
        throw ConfigError("resume: checkpoint configuration differs from the current config");
    }
}

}  // namespace

TrainResult train(const RunConfig& config, const data::WindowBatcher& batcher, const fs::path& run_dir,
                  const TrainOptions& options) {
    validate(config);
    const fam::FamConfig fam_cfg = config.fam_config();
    const diffusion::NoiseSchedule schedule = config.schedule();
    const Rng master(config.seed);
    fs::create_directories(run_dir);
    const fs::path loss_path = run_dir / "loss.tsv";

    Checkpoint ckpt;
    std::vector<LossRow> rows;
    if (options.resume) {
        ckpt = load_checkpoint(checkpoint_path(run_dir, newest_epoch(run_dir)), config.adam);
        require_same_model(ckpt, config);
        rows = read_loss_rows(loss_path, ckpt.epoch);
    } else {
        ckpt.fam = fam_cfg;
        ckpt.schedule_steps = config.schedule_steps;
        ckpt.beta_start = config.beta_start;
        ckpt.beta_end = config.beta_end;
        ckpt.window = config.window;
        ckpt.stride = config.stride;
        Rng init = master.derive("fam/init");
        ckpt.params = fam::init_params(fam_cfg, init);
        ckpt.adam = nn::AdamState(ckpt.params, config.adam);
        save_checkpoint(checkpoint_path(run_dir, 0), ckpt);
    }
    data::write_file(run_dir / "config.txt", dump_config(config));

    TrainResult result;
    result.loss_curve = loss_path;
    result.checkpoint = checkpoint_path(run_dir, ckpt.epoch);
    {
        double total = 0.0;
        std::size_t count = 0, epoch = 1;
        for (const auto& r : rows) {
            if (r.epoch != epoch) {
                if (count) result.epoch_means.push_back(total / double(count));
                total = 0.0;
                count = 0;
                epoch = r.epoch;
            }
            total += r.loss;
            ++count;
        }
        if (count) result.epoch_means.push_back(total / double(count));
    }

    const double total_steps = double(config.epochs * batcher.batches_per_epoch());
    for (std::size_t epoch = ckpt.epoch + 1; epoch <= config.epochs; ++epoch) {
        Rng erng = master.derive("train/epoch/" + std::to_string(epoch));
        const auto batches = batcher.epoch(erng);
        double epoch_total = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            std::vector<data::TrainingWindow> windows;
            windows.reserve(batches[b].size());
            for (const auto& ref : batches[b]) windows.push_back(batcher.materialize(ref));
            const std::uint64_t bseed = derive_seed(erng.seed(), "batch/" + std::to_string(b));
            BatchResult br = batch_gradient(ckpt.params, fam_cfg, schedule, windows, bseed, config.threads);

            double lr_scale = 1.0;
            if (config.lr_schedule == "cosine") {
                const double progress = double(ckpt.adam.step()) / total_steps;
                lr_scale = config.lr_min_ratio +
                           (1.0 - config.lr_min_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
            }
            const std::size_t step = static_cast<std::size_t>(ckpt.adam.step()) + 1;
            if (!std::isfinite(br.loss)) {
                throw NumericalError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                                     std::to_string(epoch) + ", lr " + format_loss(config.adam.lr * lr_scale) + ")");
            }
            nn::adam_step(ckpt.params, br.grads, ckpt.adam, lr_scale);
            rows.push_back({step, epoch, br.loss});
            result.step_losses.push_back(br.loss);
            epoch_total += br.loss;
        }
        ckpt.epoch = epoch;
        save_checkpoint(checkpoint_path(run_dir, epoch), ckpt);
        write_loss_rows(loss_path, rows);
        result.checkpoint = checkpoint_path(run_dir, epoch);
        result.epoch_means.push_back(epoch_total / double(batches.size()));
        if (options.on_epoch) options.on_epoch({epoch, static_cast<std::size_t>(ckpt.adam.step()),
                                                result.epoch_means.back()});
    }
    if (!fs::exists(loss_path)) write_loss_rows(loss_path, rows);
    result.steps = static_cast<std::size_t>(ckpt.adam.step());
    return result;
}

}  // namespace ldif::pipeline
