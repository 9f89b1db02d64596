#include "ldif/pipeline/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"

namespace ldif::pipeline {

fam::FamConfig RunConfig::fam_config() const {
    fam::FamConfig c = fam;
    c.coeff_dim = synth.dims.coeff_dim();
    c.identity_dim = synth.dims.identity_dim;
    c.audio_dim = synth.dims.audio_dim;
    c.steps = schedule_steps;
    return c;
}

diffusion::NoiseSchedule RunConfig::schedule() const {
    return diffusion::NoiseSchedule(schedule_steps, beta_start, beta_end);
}

void validate(const RunConfig& c) {
    fam::validate(c.fam_config());
    (void)c.schedule();
    nn::validate(c.adam);
    if (c.window == 0 || c.stride == 0) throw ConfigError("window and stride must be positive");
    if (c.stride > c.window) throw ConfigError("train.stride must not exceed train.window");
    if (c.dataset.length_min < c.window) throw ConfigError("data.length_min must be at least train.window");
    if (c.dataset.length_max < c.dataset.length_min) throw ConfigError("data.length_max below data.length_min");
    if (c.batch == 0) throw ConfigError("train.batch must be positive");
    if (c.threads == 0) throw ConfigError("train.threads must be positive");
    if (c.lr_schedule != "constant" && c.lr_schedule != "cosine") {
        throw ConfigError("optim.schedule must be 'constant' or 'cosine', got '" + c.lr_schedule + "'");
    }
    if (!(c.lr_min_ratio >= 0.0 && c.lr_min_ratio <= 1.0)) throw ConfigError("optim.lr_min_ratio must lie in [0, 1]");
    if (c.synth.dims.expr_dim < 2) throw ConfigError("data.expr_dim must be at least 2");
    if (!(c.synth.fps > 0.0)) throw ConfigError("data.fps must be positive");
    if (c.samples == 0) throw ConfigError("sample.n must be positive");
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + text + "'");
}

template <class T>
std::string format_number(T value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

struct Entry {
    ConfigKey key;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Entry number(std::string name, std::string help, T RunConfig::*member) {
    return {{std::move(name), std::move(help)},
            [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
            [member](const RunConfig& c) { return format_number(c.*member); }};
}

template <class T>
Entry number_at(std::string name, std::string help, std::function<T&(RunConfig&)> ref) {
    return {{std::move(name), std::move(help)},
            [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_number<T>(k, v); },
            [ref](const RunConfig& c) {
                RunConfig copy = c;
                return format_number(ref(copy));
            }};
}

Entry flag_at(std::string name, std::string help, std::function<bool&(RunConfig&)> ref) {
    return {{std::move(name), std::move(help)},
            [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_bool(k, v); },
            [ref](const RunConfig& c) {
                RunConfig copy = c;
                return std::string(ref(copy) ? "true" : "false");
            }};
}

Entry text(std::string name, std::string help, std::string RunConfig::*member) {
    return {{std::move(name), std::move(help)},
            [member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
            [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        number<std::uint64_t>("seed", "master seed; every random stream is derived from it", &RunConfig::seed),

        text("data.dir", "dataset directory (gen-data output, train input)", &RunConfig::data_dir),
        number_at<std::size_t>("data.count", "pairs to generate; attitudes cycle positive/neutral/negative",
                               [](RunConfig& c) -> std::size_t& { return c.dataset.count; }),
        number_at<std::size_t>("data.first_index", "global index of the first generated pair (disjoint splits)",
                               [](RunConfig& c) -> std::size_t& { return c.dataset.first_index; }),
        number_at<std::size_t>("data.length_min", "shortest generated sequence, frames",
                               [](RunConfig& c) -> std::size_t& { return c.dataset.length_min; }),
        number_at<std::size_t>("data.length_max", "longest generated sequence, frames",
                               [](RunConfig& c) -> std::size_t& { return c.dataset.length_max; }),
        number_at<std::uint32_t>("data.listeners", "number of distinct listener identities",
                                 [](RunConfig& c) -> std::uint32_t& { return c.dataset.listeners; }),
        number_at<std::size_t>("data.expr_dim", "expression channels E (coefficient frame is 3 + E + 3)",
                               [](RunConfig& c) -> std::size_t& { return c.synth.dims.expr_dim; }),
        number_at<std::size_t>("data.identity_dim", "listener identity vector length",
                               [](RunConfig& c) -> std::size_t& { return c.synth.dims.identity_dim; }),
        number_at<std::size_t>("data.audio_dim", "speaker acoustic feature channels",
                               [](RunConfig& c) -> std::size_t& { return c.synth.dims.audio_dim; }),
        number_at<double>("data.fps", "frame rate", [](RunConfig& c) -> double& { return c.synth.fps; }),
        number_at<double>("data.energy_scale", "amplitude of the speaker energy oscillation",
                          [](RunConfig& c) -> double& { return c.synth.energy_scale; }),

        number<int>("schedule.steps", "diffusion steps T", &RunConfig::schedule_steps),
        number<double>("schedule.beta_start", "beta at t = 1 (linear schedule)", &RunConfig::beta_start),
        number<double>("schedule.beta_end", "beta at t = T", &RunConfig::beta_end),

        number_at<std::size_t>("fam.layers", "noise predictor layers",
                               [](RunConfig& c) -> std::size_t& { return c.fam.layers; }),
        number_at<std::size_t>("fam.heads", "attention heads (must divide fam.width)",
                               [](RunConfig& c) -> std::size_t& { return c.fam.heads; }),
        number_at<std::size_t>("fam.width", "model width (even)",
                               [](RunConfig& c) -> std::size_t& { return c.fam.width; }),
        number_at<std::size_t>("fam.ff_mult", "feed-forward hidden width as a multiple of fam.width",
                               [](RunConfig& c) -> std::size_t& { return c.fam.ff_mult; }),
        flag_at("fam.time_additive", "also add a projected step embedding to the latent tokens",
                [](RunConfig& c) -> bool& { return c.fam.time_additive; }),
        flag_at("fam.positional", "add sinusoidal frame positions to latent and speaker tokens",
                [](RunConfig& c) -> bool& { return c.fam.positional; }),

        number_at<double>("optim.lr", "Adam learning rate", [](RunConfig& c) -> double& { return c.adam.lr; }),
        number_at<double>("optim.beta1", "Adam first-moment decay",
                          [](RunConfig& c) -> double& { return c.adam.beta1; }),
        number_at<double>("optim.beta2", "Adam second-moment decay",
                          [](RunConfig& c) -> double& { return c.adam.beta2; }),
        number_at<double>("optim.eps", "Adam denominator epsilon", [](RunConfig& c) -> double& { return c.adam.eps; }),
        text("optim.schedule", "learning-rate schedule: constant | cosine", &RunConfig::lr_schedule),
        number<double>("optim.lr_min_ratio", "final lr as a fraction of optim.lr under cosine decay",
                       &RunConfig::lr_min_ratio),

        number<std::size_t>("train.window", "frames per training/generation window", &RunConfig::window),
        number<std::size_t>("train.stride", "window stride, frames", &RunConfig::stride),
        number<std::size_t>("train.epochs", "training epochs", &RunConfig::epochs),
        number<std::size_t>("train.batch", "windows per Adam step", &RunConfig::batch),
        number<std::size_t>("train.threads", "worker threads for per-window tapes and sampling",
                            &RunConfig::threads),
        text("train.run_dir", "output directory for checkpoints and loss.tsv", &RunConfig::run_dir),

        number<std::size_t>("sample.n", "samples per input sequence", &RunConfig::samples),
        flag_at("sample.deterministic", "start from zero and skip sampler noise (regression baseline)",
                [](RunConfig& c) -> bool& { return c.deterministic_sampling; }),
    };
    return table;
}

const Entry& find(const std::string& key) {
    for (const auto& e : entries()) {
        if (e.key.name == key) return e;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& e : entries()) out.push_back(e.key);
        return out;
    }();
    return keys;
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
    find(key).set(config, key, value);
}

std::string get_key(const RunConfig& config, const std::string& key) { return find(key).get(config); }

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "missing key");
        try {
            set_key(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::string text;
    try {
        text = data::read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    apply_config_text(config, text, path.string());
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
        set_key(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
}

std::string dump_config(const RunConfig& config) {
    std::string out;
    for (const auto& e : entries()) out += e.key.name + " = " + e.get(config) + "\n";
    return out;
}

std::string config_help() {
    const RunConfig defaults;
    std::string out = "Config keys (file lines 'key = value', or key=value arguments):\n";
    for (const auto& e : entries()) {
        out += "  " + e.key.name + " (default " + e.get(defaults) + ")\n      " + e.key.help + "\n";
    }
    return out;
}

}  // namespace ldif::pipeline
