#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"
#include "ldif/eval/metrics.hpp"
#include "ldif/pipeline/config.hpp"
#include "ldif/pipeline/generate.hpp"
#include "ldif/pipeline/train.hpp"
#include "ldif/pipeline/windows.hpp"
#include "scratch_dir.hpp"

using namespace ldif;
using namespace ldif::pipeline;

namespace {

// Random-walk clip with a per-clip offset, like independently sampled windows.
NumArray walk_clip(Rng& rng, std::size_t frames, std::size_t channels) {
    NumArray clip({frames, channels});
    for (std::size_t c = 0; c < channels; ++c) {
        double x = rng.uniform(-1.0, 1.0);
        for (std::size_t k = 0; k < frames; ++k) clip(k, c) = (x += 0.02 * rng.normal());
    }
    return clip;
}

double max_step(const NumArray& seq) {
    double worst = 0.0;
    for (std::size_t k = 1; k < seq.rows(); ++k) {
        for (std::size_t c = 0; c < seq.cols(); ++c) worst = std::max(worst, std::abs(seq(k, c) - seq(k - 1, c)));
    }
    return worst;
}

RunConfig tiny_run() {
    RunConfig c;
    c.seed = 5;
    c.synth.dims.expr_dim = 2;
    c.synth.dims.identity_dim = 4;
    c.synth.dims.audio_dim = 3;
    c.synth.min_length = 20;
    c.dataset.count = 6;
    c.dataset.length_min = 30;
    c.dataset.length_max = 50;
    c.fam.layers = 1;
    c.fam.heads = 2;
    c.fam.width = 8;
    c.fam.ff_mult = 2;
    c.schedule_steps = 10;
    c.window = 20;
    c.stride = 10;
    c.batch = 4;
    c.epochs = 2;
    return c;
}

data::WindowBatcher tiny_batcher(const RunConfig& c) {
    std::vector<data::DialoguePair> pairs;
    for (std::size_t i = 0; i < c.dataset.count; ++i) pairs.push_back(data::make_pair(c.synth, c.dataset, c.seed, i));
    return data::WindowBatcher(pairs, c.window, c.stride, c.batch);
}

}  // namespace

TEST_CASE("split_windows examples") {
    CHECK(split_windows(100, 40, 20) == std::vector<std::size_t>{0, 20, 40, 60});
    CHECK(split_windows(90, 40, 20) == std::vector<std::size_t>{0, 20, 40, 50});
    CHECK(split_windows(40, 40, 20) == std::vector<std::size_t>{0});
    CHECK(split_windows(41, 40, 40) == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(split_windows(39, 40, 20), DataError);
    CHECK_THROWS_AS(split_windows(100, 40, 0), ConfigError);
    CHECK_THROWS_AS(split_windows(100, 40, 41), ConfigError);
}

TEST_CASE("split_windows covers every frame") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t w = std::size_t(rng.uniform_int(1, 50));
        const std::size_t s = std::size_t(rng.uniform_int(1, std::int64_t(w)));
        const std::size_t n = w + std::size_t(rng.uniform_int(0, 200));
        const auto starts = split_windows(n, w, s);
        CHECK(starts.front() == 0);
        CHECK(starts.back() == n - w);
        std::vector<int> covered(n, 0);
        for (std::size_t st : starts) {
            for (std::size_t k = st; k < st + w; ++k) covered[k] = 1;
        }
        CHECK(std::count(covered.begin(), covered.end(), 1) == std::ptrdiff_t(n));
    }
}

TEST_CASE("stitch weights sum to one") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t w = std::size_t(rng.uniform_int(2, 50));
        const std::size_t s = std::size_t(rng.uniform_int(1, std::int64_t(w)));
        const std::size_t n = w + std::size_t(rng.uniform_int(0, 150));
        const auto starts = split_windows(n, w, s);
        const NumArray weights = stitch_weights(starts, w, n);
        for (std::size_t k = 0; k < n; ++k) {
            double total = 0.0;
            for (std::size_t i = 0; i < starts.size(); ++i) {
                CHECK(weights(i, k) >= 0.0);
                total += weights(i, k);
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("stitch examples") {
    const std::size_t starts[] = {0, 20};
    const NumArray clips[] = {NumArray({40, 1}, 0.0), NumArray({40, 1}, 1.0)};
    const NumArray y = stitch_windows(clips, starts, 60);
    CHECK(y.rows() == 60);
    for (std::size_t k = 0; k < 20; ++k) CHECK(y(k, 0) == 0.0);
    for (std::size_t j = 0; j < 20; ++j) CHECK(std::abs(y(20 + j, 0) - double(j + 1) / 21.0) < 1e-15);
    for (std::size_t k = 40; k < 60; ++k) CHECK(y(k, 0) == 1.0);
    CHECK(y(20, 0) < 0.05);
    CHECK(y(39, 0) > 0.95);

    const std::size_t gap[] = {0, 50};
    const NumArray two[] = {NumArray({40, 1}), NumArray({40, 1})};
    CHECK_THROWS_WITH_AS(stitch_windows(two, gap, 90), doctest::Contains("[40, 50)"), DataError);
    const std::size_t short_end[] = {0, 20};
    CHECK_THROWS_AS(stitch_windows(two, short_end, 70), DataError);
}

TEST_CASE("stitching is convex") {
    Rng rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 40 + std::size_t(rng.uniform_int(0, 120));
        const auto starts = split_windows(n, 40, 20);
        std::vector<NumArray> clips;
        for (std::size_t i = 0; i < starts.size(); ++i) clips.push_back(walk_clip(rng, 40, 3));
        const NumArray y = stitch_windows(clips, starts, n);
        CHECK(y.rows() == n);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t c = 0; c < 3; ++c) {
                double lo = INFINITY, hi = -INFINITY;
                for (std::size_t i = 0; i < starts.size(); ++i) {
                    if (k < starts[i] || k >= starts[i] + 40) continue;
                    lo = std::min(lo, clips[i](k - starts[i], c));
                    hi = std::max(hi, clips[i](k - starts[i], c));
                }
                CHECK(y(k, c) >= lo - 1e-12);
                CHECK(y(k, c) <= hi + 1e-12);
            }
        }
    }
    // Identical content on the overlap passes through unchanged.
    const NumArray base = walk_clip(rng, 100, 2);
    const auto starts = split_windows(100, 40, 20);
    std::vector<NumArray> slices;
    for (std::size_t s : starts) slices.push_back(base.slice_rows(s, 40));
    CHECK(nn::max_abs_diff(stitch_windows(slices, starts, 100), base) < 1e-12);
}

TEST_CASE("stitching bounds frame-to-frame jumps") {
    Rng rng(34);
    for (int trial = 0; trial < 50; ++trial) {
        const auto starts = split_windows(100, 40, 20);
        // Windows cut from one underlying sequence: the stitched jumps never
        // exceed the largest jump inside a window.
        const NumArray base = walk_clip(rng, 100, 3);
        std::vector<NumArray> consistent;
        double intra = 0.0;
        for (std::size_t s : starts) {
            consistent.push_back(base.slice_rows(s, 40));
            intra = std::max(intra, max_step(consistent.back()));
        }
        CHECK(max_step(stitch_windows(consistent, starts, 100)) <= intra + 1e-9);

        // Independent windows: a crossfade over m frames adds at most
        // |a − b| / (m + 1) to the largest intra-window jump.
        std::vector<NumArray> clips;
        double steps = 0.0, gap = 0.0;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            clips.push_back(walk_clip(rng, 40, 3));
            steps = std::max(steps, max_step(clips.back()));
            if (i == 0) continue;
            for (std::size_t j = 0; j < 20; ++j) {
                for (std::size_t c = 0; c < 3; ++c) gap = std::max(gap, std::abs(clips[i - 1](20 + j, c) - clips[i](j, c)));
            }
        }
        const NumArray y = stitch_windows(clips, starts, 100);
        CHECK(max_step(y) <= steps + gap / 21.0 + 1e-9);
        CHECK(eval::smoothness(y) <= eval::smoothness(concatenate_windows(clips, starts, 100)));
    }
}

TEST_CASE("config grammar") {
    RunConfig c;
    apply_config_text(c,
                      "# desk run\n"
                      "\n"
                      "seed = 42\n"
                      "fam.layers=2   # fewer layers\n"
                      "  optim.lr = 0.0005\n"
                      "sample.deterministic = true\n"
                      "optim.schedule = cosine\n");
    CHECK(c.seed == 42);
    CHECK(c.fam.layers == 2);
    CHECK(c.adam.lr == 0.0005);
    CHECK(c.deterministic_sampling);
    CHECK(c.lr_schedule == "cosine");

    CHECK_THROWS_WITH_AS(apply_config_text(c, "seed = 1\nbogus.key = 3\n", "run.cfg"),
                         doctest::Contains("run.cfg:2: unknown config key 'bogus.key'"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_config_text(c, "fam.width 64\n", "x"), doctest::Contains("x:1:"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(c, "fam.width = wide\n"), ConfigError);
    CHECK_THROWS_AS(apply_overrides(c, {"train.epochs"}), ConfigError);
    apply_overrides(c, {"train.epochs=3", "data.count=9"});
    CHECK(c.epochs == 3);
    CHECK(c.dataset.count == 9);

    RunConfig d;
    apply_config_text(d, dump_config(c));
    CHECK(dump_config(d) == dump_config(c));
    for (const auto& key : config_keys()) {
        CHECK(get_key(d, key.name) == get_key(c, key.name));
        CHECK(config_help().find(key.name) != std::string::npos);
    }
}

TEST_CASE("config validation names the field") {
    RunConfig c;
    CHECK_NOTHROW(validate(c));
    c.stride = 50;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("train.stride"), ConfigError);
    c = RunConfig{};
    c.fam.heads = 5;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.lr_schedule = "step";
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("zero epochs leaves the initialisation") {
    ScratchDir dir("zero-epochs");
    RunConfig c = tiny_run();
    c.epochs = 0;
    const TrainResult r = train(c, tiny_batcher(c), dir.path());
    const Checkpoint ck = load_checkpoint(r.checkpoint);
    Rng init = Rng(c.seed).derive("fam/init");
    CHECK(ck.params == fam::init_params(c.fam_config(), init));
    CHECK(ck.epoch == 0);
    CHECK(r.steps == 0);
}

TEST_CASE("training is reproducible, thread-invariant and resumable") {
    ScratchDir a("train-a"), b("train-b"), t("train-t"), r("train-r");
    RunConfig c = tiny_run();
    const auto batcher = tiny_batcher(c);
    const TrainResult ra = train(c, batcher, a.path());
    train(c, batcher, b.path());
    CHECK(ra.epoch_means.size() == 2);
    CHECK(ra.steps == 2 * batcher.batches_per_epoch());
    CHECK(data::read_file(a / "epoch-0002.ckpt") == data::read_file(b / "epoch-0002.ckpt"));
    CHECK(data::read_file(a / "loss.tsv") == data::read_file(b / "loss.tsv"));

    RunConfig threaded = c;
    threaded.threads = 3;
    train(threaded, batcher, t.path());
    CHECK(load_checkpoint(t / "epoch-0002.ckpt").params == load_checkpoint(a / "epoch-0002.ckpt").params);

    RunConfig first = c;
    first.epochs = 1;
    train(first, batcher, r.path());
    const TrainResult resumed = train(c, batcher, r.path(), {.resume = true});
    CHECK(resumed.step_losses.size() == batcher.batches_per_epoch());
    CHECK(data::read_file(r / "epoch-0002.ckpt") == data::read_file(a / "epoch-0002.ckpt"));
    CHECK(data::read_file(r / "loss.tsv") == data::read_file(a / "loss.tsv"));

    RunConfig other = c;
    other.fam.width = 16;
    CHECK_THROWS_AS(train(other, batcher, r.path(), {.resume = true}), ConfigError);
}

TEST_CASE("batch gradients do not depend on the thread count") {
    RunConfig c = tiny_run();
    const auto batcher = tiny_batcher(c);
    std::vector<data::TrainingWindow> windows;
    for (std::size_t i = 0; i < 5; ++i) windows.push_back(batcher.materialize(batcher.windows()[i]));
    Rng rng(1);
    const auto params = fam::init_params(c.fam_config(), rng);
    const auto one = batch_gradient(params, c.fam_config(), c.schedule(), windows, 77, 1);
    const auto four = batch_gradient(params, c.fam_config(), c.schedule(), windows, 77, 4);
    CHECK(one.loss == four.loss);
    CHECK(one.grads == four.grads);
}

TEST_CASE("untrained loss starts near one and falls over 200 steps") {
    ScratchDir dir("loss-trend");
    RunConfig c = tiny_run();
    c.dataset.count = 30;
    c.fam.width = 16;
    c.schedule_steps = 50;
    c.adam.lr = 2e-3;
    const auto batcher = tiny_batcher(c);
    c.epochs = (200 + batcher.batches_per_epoch() - 1) / batcher.batches_per_epoch();
    const TrainResult r = train(c, batcher, dir.path());
    REQUIRE(r.step_losses.size() >= 200);
    // The untrained network's loss.
    CHECK(r.step_losses[0] > 0.5);
    CHECK(r.step_losses[0] < 2.0);
    // Least-squares slope over the first 200 steps, and block means.
    double mx = 99.5, my = 0.0;
    for (std::size_t i = 0; i < 200; ++i) my += r.step_losses[i] / 200.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
        sxy += (double(i) - mx) * (r.step_losses[i] - my);
        sxx += (double(i) - mx) * (double(i) - mx);
    }
    CHECK(sxy / sxx < 0.0);
    double block[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < 200; ++i) block[i / 50] += r.step_losses[i] / 50.0;
    CAPTURE(block[0]);
    CAPTURE(block[3]);
    CHECK(block[3] < block[0]);
}

TEST_CASE("a diverging run stops with a diagnostic") {
    ScratchDir dir("nan");
    RunConfig c = tiny_run();
    c.adam.lr = 1e200;
    try {
        train(c, tiny_batcher(c), dir.path());
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("step") != std::string::npos);
        CHECK(msg.find("lr") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip is bit-exact") {
    ScratchDir dir("ckpt");
    RunConfig c = tiny_run();
    c.epochs = 1;
    const TrainResult r = train(c, tiny_batcher(c), dir.path());
    const Checkpoint ck = load_checkpoint(r.checkpoint);
    save_checkpoint(dir / "copy.ckpt", ck);
    CHECK(data::read_file(dir / "copy.ckpt") == data::read_file(r.checkpoint));
    CHECK(ck.adam.step() == std::int64_t(r.steps));
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "missing.ckpt"), doctest::Contains("train"), DataError);
}

TEST_CASE("generate is reproducible and stochastic") {
    RunConfig c = tiny_run();
    Rng rng(2);
    Checkpoint ck;
    ck.fam = c.fam_config();
    ck.schedule_steps = c.schedule_steps;
    ck.beta_start = c.beta_start;
    ck.beta_end = c.beta_end;
    ck.window = c.window;
    ck.stride = c.stride;
    ck.params = fam::init_params(ck.fam, rng);
    // Non-zero output projection so the prediction depends on the input.
    ck.params.set("out/w", nn::glorot_uniform(rng, c.fam.width, ck.fam.coeff_dim));
    const Model model = Model::from_checkpoint(ck);
    CHECK(model.id.size() == 16);

    const data::DialoguePair pair = data::make_pair(c.synth, c.dataset, c.seed, 0);
    const auto a = generate(model, pair, pair.identity, data::Attitude::positive, 2, 9);
    const auto b = generate(model, pair, pair.identity, data::Attitude::positive, 2, 9, {.threads = 3});
    REQUIRE(a.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a[i].listener == b[i].listener);
        CHECK(a[i].listener.rows() == pair.length());
        CHECK(a[i].checkpoint_id == model.id);
    }

    const auto five = generate(model, pair, pair.identity, data::Attitude::negative, 5, 10);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) CHECK(nn::max_abs_diff(five[i].listener, five[j].listener) > 0.0);
        CHECK(five[i].seed == derive_seed(10, "sample/" + std::to_string(i)));
    }

    const auto det = generate(model, pair, pair.identity, data::Attitude::negative, 3, 10, {.deterministic = true});
    CHECK(det[0].listener == det[1].listener);
    CHECK(det[1].listener == det[2].listener);
    std::vector<NumArray> det_seqs;
    for (const auto& s : det) det_seqs.push_back(s.listener);
    CHECK(eval::diversity(det_seqs) == 0.0);

    data::SequenceDims wrong = pair.dims;
    wrong.expr_dim = 5;
    CHECK_THROWS_AS(model.check_compatible(wrong), ConfigError);
    data::DialoguePair other = pair;
    other.dims = wrong;
    CHECK_THROWS_AS(generate(model, other, pair.identity, data::Attitude::neutral, 1, 1), ConfigError);
}
