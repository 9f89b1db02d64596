#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldif/data/dataset.hpp"
#include "ldif/data/synth.hpp"
#include "ldif/diffusion/diffusion.hpp"
#include "ldif/fam/fam.hpp"
#include "ldif/nn/adam.hpp"

namespace ldif::pipeline {

/// Everything a run depends on. Defaults are the desk-scale configuration.
struct RunConfig {
    std::uint64_t seed = 1;

    data::SynthConfig synth;
    data::DatasetSpec dataset{.count = 200};
    std::string data_dir = "data";

    int schedule_steps = 50;
    double beta_start = 1e-3;
    double beta_end = 0.05;

    fam::FamConfig fam;

    nn::AdamConfig adam;
    /// "constant" or "cosine" (decays to lr_min_ratio·lr over the run).
    std::string lr_schedule = "constant";
    double lr_min_ratio = 0.1;

    std::size_t window = 40;
    std::size_t stride = 20;
    std::size_t epochs = 20;
    std::size_t batch = 16;
    std::size_t threads = 1;
    std::string run_dir = "runs/train";

    std::size_t samples = 1;
    bool deterministic_sampling = false;

    /// FamConfig with the data dimensions and step count filled in.
    fam::FamConfig fam_config() const;
    diffusion::NoiseSchedule schedule() const;
};

/// Throws ConfigError naming the first inconsistent field.
void validate(const RunConfig& config);

struct ConfigKey {
    std::string name;
    std::string help;
};

/// Every recognised key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Sets one dotted key from its text value. Unknown keys and malformed values
/// are ConfigErrors.
void set_key(RunConfig& config, const std::string& key, const std::string& value);
std::string get_key(const RunConfig& config, const std::string& key);

/// Applies a config file: one `key = value` per line, `#` starts a comment,
/// blank lines ignored.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

/// Every key with its resolved value, in the config-file grammar.
std::string dump_config(const RunConfig& config);
/// Help text listing every key with its default and description.
std::string config_help();

}  // namespace ldif::pipeline
