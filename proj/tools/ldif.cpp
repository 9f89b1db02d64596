// Command-line entry point: gen-data, train, sample, eval, grad-check.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldif/data/dataset.hpp"
#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"
#include "ldif/eval/metrics.hpp"
#include "ldif/pipeline/checks.hpp"
#include "ldif/pipeline/config.hpp"
#include "ldif/pipeline/generate.hpp"
#include "ldif/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace ldif;

namespace {

constexpr double kGradCheckTolerance = 1e-3;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config_path, "config file of 'key = value' lines");
    cmd->add_option("--seed", common.seed, "master seed (same as seed=N)");
    cmd->add_option("overrides", common.overrides, "key=value config overrides, applied after --config");
    cmd->footer(pipeline::config_help());
}

pipeline::RunConfig resolve(const Common& common) {
    pipeline::RunConfig config;
    if (!common.config_path.empty()) pipeline::apply_config_file(config, common.config_path);
    pipeline::apply_overrides(config, common.overrides);
    if (common.seed) config.seed = *common.seed;
    pipeline::validate(config);
    std::cerr << "# resolved config\n";
    std::istringstream lines(pipeline::dump_config(config));
    for (std::string line; std::getline(lines, line);) std::cerr << "#   " << line << '\n';
    return config;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += (c == '\n') ? ' ' : c;
    }
    return out + "\"";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
            return 2;
        case ErrorKind::numerical:
            return 4;
        default:
            return 3;
    }
}

std::string kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
            return "config";
        case ErrorKind::data:
            return "data";
        case ErrorKind::numerical:
            return "numerical";
        case ErrorKind::index:
            return "index";
        case ErrorKind::io:
            return "io";
    }
    return "unknown";
}

fs::path newest_checkpoint(const fs::path& run_dir) {
    std::optional<fs::path> best;
    if (fs::is_directory(run_dir)) {
        for (const auto& e : fs::directory_iterator(run_dir)) {
            const std::string name = e.path().filename().string();
            if (name.starts_with("epoch-") && name.ends_with(".ckpt") && (!best || e.path() > *best)) best = e.path();
        }
    }
    if (!best) {
        throw DataError("no checkpoint in '" + run_dir.string() + "'; run train first or pass --checkpoint");
    }
    return *best;
}

int cmd_gen_data(const Common& common, std::optional<std::size_t> per_attitude, const std::string& out_opt,
                 bool force) {
    pipeline::RunConfig config = resolve(common);
    if (per_attitude) config.dataset.count = 3 * *per_attitude;
    const fs::path out = out_opt.empty() ? fs::path(config.data_dir) : fs::path(out_opt);
    const auto manifest = data::write_dataset(out, config.synth, config.dataset, config.seed, force);
    std::map<data::Attitude, std::size_t> counts;
    std::size_t frames = 0;
    for (const auto& e : manifest) {
        ++counts[e.attitude];
        frames += e.length;
    }
    std::cout << "wrote " << manifest.size() << " pairs to " << out.string() << " (positive "
              << counts[data::Attitude::positive] << ", neutral " << counts[data::Attitude::neutral] << ", negative "
              << counts[data::Attitude::negative] << ", " << frames << " frames)\n";
    return 0;
}

int cmd_train(const Common& common, const std::string& input, const std::string& out, bool resume) {
    pipeline::RunConfig config = resolve(common);
    const fs::path data_dir = input.empty() ? fs::path(config.data_dir) : fs::path(input);
    const fs::path run_dir = out.empty() ? fs::path(config.run_dir) : fs::path(out);
    const auto batcher = data::WindowBatcher::from_directory(data_dir, config.window, config.stride, config.batch);
    std::cout << "training on " << batcher.pairs().size() << " pairs, " << batcher.window_count() << " windows, "
              << batcher.batches_per_epoch() << " steps per epoch\n";
    pipeline::TrainOptions options;
    options.resume = resume;
    options.on_epoch = [](const pipeline::TrainProgress& p) {
        std::printf("epoch %zu  step %zu  mean loss %.6f\n", p.epoch, p.step, p.epoch_mean_loss);
        std::fflush(stdout);
    };
    const auto result = pipeline::train(config, batcher, run_dir, options);
    std::cout << "checkpoint " << result.checkpoint.string() << "\nloss curve " << result.loss_curve.string() << '\n';
    return 0;
}

std::vector<fs::path> sequence_inputs(const fs::path& input) {
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& e : data::read_manifest(input)) files.push_back(input / "pairs" / (e.id + ".lseq"));
        return files;
    }
    if (!fs::exists(input)) throw DataError("input '" + input.string() + "' not found");
    return {input};
}

int cmd_sample(const Common& common, const std::string& checkpoint, const std::string& input,
               std::optional<std::size_t> n, const std::string& attitude_opt, const std::string& out_opt) {
    pipeline::RunConfig config = resolve(common);
    if (n) config.samples = *n;
    if (config.samples == 0) throw ConfigError("--n must be positive");
    if (input.empty()) throw ConfigError("sample needs --input (an .lseq file or a dataset directory)");
    const fs::path ckpt = checkpoint.empty() ? newest_checkpoint(config.run_dir) : fs::path(checkpoint);
    const auto model = pipeline::Model::load(ckpt);
    const fs::path out = out_opt.empty() ? fs::path("samples") : fs::path(out_opt);
    fs::create_directories(out);
    pipeline::GenerateOptions options;
    options.deterministic = config.deterministic_sampling;
    options.threads = config.threads;

    std::size_t written = 0;
    for (const auto& path : sequence_inputs(input)) {
        const data::DialoguePair pair = data::read_sequence(path);
        const data::Attitude attitude = attitude_opt.empty() ? pair.attitude : data::parse_attitude(attitude_opt);
        const std::uint64_t seed = derive_seed(config.seed, "sample-input/" + path.filename().string());
        const auto runs = pipeline::generate(model, pair, pair.identity, attitude, config.samples, seed, options);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            char suffix[32];
            std::snprintf(suffix, sizeof(suffix), "_s%02zu", i);
            const std::string stem = path.stem().string() + suffix;
            data::DialoguePair generated = pair;
            generated.attitude = attitude;
            generated.listener = runs[i].listener;
            data::write_sequence(out / (stem + ".lseq"), generated);
            nlohmann::ordered_json meta;
            meta["source"] = fs::absolute(path).lexically_normal().string();
            meta["sample_index"] = i;
            meta["seed"] = runs[i].seed;
            meta["checkpoint"] = runs[i].checkpoint_id;
            meta["attitude"] = std::string(data::to_string(attitude));
            meta["deterministic"] = options.deterministic;
            data::write_file(out / (stem + ".meta.json"), meta.dump(2) + "\n");
            std::printf("%s  %.2fs\n", (out / (stem + ".lseq")).string().c_str(), runs[i].seconds);
            ++written;
        }
    }
    std::cout << "wrote " << written << " samples to " << out.string() << '\n';
    return 0;
}

int cmd_eval(const Common& common, const std::string& input, const std::string& out_opt,
             const std::string& plot) {
    const pipeline::RunConfig config = resolve(common);
    if (input.empty()) throw ConfigError("eval needs --input (a directory written by sample)");
    if (!fs::is_directory(input)) throw DataError("'" + input + "' is not a directory of samples");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
        if (e.path().extension() == ".lseq") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .lseq samples in '" + input + "'; run sample first");

    eval::MetricReport report;
    std::map<std::string, std::vector<nn::NumArray>> by_source;
    std::map<data::Attitude, std::vector<nn::NumArray>> by_attitude;
    std::optional<data::SequenceDims> dims;
    double fd_angle = 0, fd_exp = 0, fd_trans = 0;
    for (const auto& file : files) {
        const data::DialoguePair gen = data::read_sequence(file);
        fs::path meta_path = file;
        meta_path.replace_extension(".meta.json");
        if (!fs::exists(meta_path)) throw DataError("missing sidecar '" + meta_path.string() + "'");
        const auto meta = nlohmann::json::parse(data::read_file(meta_path), nullptr, false);
        if (meta.is_discarded() || !meta.contains("source")) {
            throw DataError("sidecar '" + meta_path.string() + "' is not valid sample metadata");
        }
        const std::string source = meta["source"].get<std::string>();
        const data::DialoguePair gt = data::read_sequence(source);
        const auto fd = eval::feature_distance(gen.listener, gt.listener, gen.dims);
        fd_angle += fd.angle;
        fd_exp += fd.exp;
        fd_trans += fd.trans;
        report.smoothness = std::max(report.smoothness, eval::smoothness(gen.listener));
        by_source[source].push_back(gen.listener);
        by_attitude[gen.attitude].push_back(gen.listener);
        dims = gen.dims;
    }
    const double n = double(files.size());
    report.n_sequences = files.size();
    report.fd_angle = fd_angle / n;
    report.fd_exp = fd_exp / n;
    report.fd_trans = fd_trans / n;
    std::size_t groups = 0;
    for (const auto& [source, samples] : by_source) {
        if (samples.size() < 2) continue;
        report.diversity += eval::diversity(samples);
        ++groups;
    }
    report.diversity = groups ? report.diversity / double(groups) : 0.0;
    try {
        report.separability_p =
            eval::attitude_separability(by_attitude, *dims, 10000, derive_seed(config.seed, "eval/permutation"))
                .p_value;
    } catch (const DataError&) {
        report.separability_p = std::nan("");
    }

    const fs::path out = out_opt.empty() ? fs::path(input) / "metrics.tsv" : fs::path(out_opt);
    data::write_file(out, eval::report_tsv(report));
    std::cout << eval::report_summary(report) << "report " << out.string() << '\n';
    if (!plot.empty()) {
        const data::DialoguePair first = data::read_sequence(files.front());
        const std::size_t e0 = first.dims.expr_offset();
        data::write_file(plot, eval::channel_plot_svg(first.listener, {0, 1, 2, e0, e0 + 1},
                                                      {"pitch", "yaw", "roll", "exp0 (smile)", "exp1 (frown)"},
                                                      files.front().filename().string()));
        std::cout << "plot " << plot << '\n';
    }
    return 0;
}

int cmd_grad_check(const Common& common) {
    const pipeline::RunConfig config = resolve(common);
    const auto result =
        pipeline::fam_grad_check(pipeline::tiny_fam_config(), pipeline::kTinyFrames, config.seed, 1e-5);
    std::printf("max_relative_error %.6e\nworst %s[%zu] analytic %.9e numeric %.9e\ncoordinates %zu\n",
                result.max_relative_error, result.worst_parameter.c_str(), result.worst_index, result.worst_analytic,
                result.worst_numeric, result.coordinates_checked);
    if (!(result.max_relative_error < kGradCheckTolerance)) {
        throw NumericalError("gradient check failed: max relative error " +
                             std::to_string(result.max_relative_error) + " >= 1e-3");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Listener-motion diffusion: synthetic data, training, sampling and evaluation"};
    app.require_subcommand(1);

    Common gen_common, train_common, sample_common, eval_common, check_common;
    std::optional<std::size_t> gen_n, sample_n;
    std::string gen_out, train_input, train_out, sample_ckpt, sample_input, sample_attitude, sample_out, eval_input,
        eval_out, eval_plot;
    bool gen_force = false, train_resume = false;

    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset (pairs/NNNN.lseq + manifest.tsv)");
    add_common(gen, gen_common);
    gen->add_option("--n", gen_n, "pairs per attitude (overrides data.count = 3n)");
    gen->add_option("--out", gen_out, "dataset directory (default data.dir)");
    gen->add_flag("--force", gen_force, "replace an existing dataset in the output directory");

    auto* train = app.add_subcommand("train", "train the noise predictor; writes checkpoints and loss.tsv");
    add_common(train, train_common);
    train->add_option("--input", train_input, "dataset directory (default data.dir)");
    train->add_option("--out", train_out, "run directory (default train.run_dir)");
    train->add_flag("--resume", train_resume, "continue from the newest checkpoint in the run directory");

    auto* sample = app.add_subcommand("sample", "generate listener sequences for speaker sequences");
    add_common(sample, sample_common);
    sample->add_option("--checkpoint", sample_ckpt, "checkpoint file (default: newest in train.run_dir)");
    sample->add_option("--input", sample_input, "an .lseq file or a dataset directory");
    sample->add_option("--n", sample_n, "samples per input (overrides sample.n)");
    sample->add_option("--attitude", sample_attitude, "positive | neutral | negative (default: the input's)")
        ->check(CLI::IsMember({"positive", "neutral", "negative"}));
    sample->add_option("--out", sample_out, "output directory (default samples)");

    auto* evaluate = app.add_subcommand("eval", "metrics of generated samples against their source pairs");
    add_common(evaluate, eval_common);
    evaluate->add_option("--input", eval_input, "directory written by sample");
    evaluate->add_option("--out", eval_out, "metric TSV path (default <input>/metrics.tsv)");
    evaluate->add_option("--plot", eval_plot, "also write an SVG plot of the first sample");

    auto* check = app.add_subcommand("grad-check", "finite-difference check of the full network gradient");
    add_common(check, check_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error kind=usage message=" << quote(e.what()) << '\n';
        return 2;
    }

    try {
        if (*gen) return cmd_gen_data(gen_common, gen_n, gen_out, gen_force);
        if (*train) return cmd_train(train_common, train_input, train_out, train_resume);
        if (*sample) return cmd_sample(sample_common, sample_ckpt, sample_input, sample_n, sample_attitude, sample_out);
        if (*evaluate) return cmd_eval(eval_common, eval_input, eval_out, eval_plot);
        if (*check) return cmd_grad_check(check_common);
    } catch (const Error& e) {
        std::cerr << "error kind=" << kind_name(e.kind()) << " message=" << quote(e.what()) << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error kind=internal message=" << quote(e.what()) << '\n';
        return 1;
    }
    return 0;
}
