#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "ldif/nn/params.hpp"
#include "ldif/nn/tape.hpp"

namespace ldif::nn {

/// Scalar function of bound parameters, recorded on the given tape.
using ScalarFn = std::function<Var(Tape&, const BoundParams&)>;

struct GradCheckOptions {
    double step = 1e-5;
    /// Parameters larger than this are checked on a random subset of coordinates.
    std::size_t full_check_limit = 200;
    std::size_t sampled_coordinates = 64;
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coordinates_checked = 0;
};

/// Compares tape gradients with central differences (f(p+h) − f(p−h)) / 2h.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
/// Throws NumericalError when two evaluations at the same point differ.
GradCheckResult grad_check(const ScalarFn& f, const ParamSet& params, const GradCheckOptions& options = {});

}  // namespace ldif::nn
