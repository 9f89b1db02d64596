#pragma once

#include <cstdint>

#include "ldif/fam/fam.hpp"
#include "ldif/nn/grad_check.hpp"

namespace ldif::pipeline {

/// L=4 frames, D=3 channels, width 16, 2 heads, 2 layers.
fam::FamConfig tiny_fam_config();
inline constexpr std::size_t kTinyFrames = 4;

/// Finite-difference check of the full noise-prediction loss of a randomly
/// initialised network on a random window (all drawn from `seed`).
nn::GradCheckResult fam_grad_check(const fam::FamConfig& config, std::size_t frames, std::uint64_t seed,
                                   double step = 1e-5);

}  // namespace ldif::pipeline
