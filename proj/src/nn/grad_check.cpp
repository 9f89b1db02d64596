#include "ldif/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "ldif/error.hpp"
#include "ldif/rng.hpp"

namespace ldif::nn {

namespace {

double evaluate(const ScalarFn& f, const ParamSet& params) {
    Tape tape;
    BoundParams bound(tape, params);
    const NumArray& out = tape.value(f(tape, bound));
    if (out.size() != 1) throw ShapeError("grad_check: function must return a scalar");
    return out[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const ParamSet& params, const GradCheckOptions& options) {
    if (!(options.step >= 1e-6 && options.step <= 1e-4)) {
        throw ConfigError("grad_check: step must lie in [1e-6, 1e-4]");
    }

    Tape tape;
    BoundParams bound(tape, params);
    Var loss = f(tape, bound);
    const double base = tape.value(loss)[0];
    const double again = evaluate(f, params);
    if (std::memcmp(&base, &again, sizeof(double)) != 0) {
        throw NumericalError("grad_check: function is not deterministic (" + std::to_string(base) + " vs " +
                             std::to_string(again) + ")");
    }
    tape.backward(loss);
    const Gradients analytic = bound.gradients(tape);

    Rng rng(derive_seed(options.seed, "grad_check"));
    GradCheckResult result;
    ParamSet probe = params;
    for (const auto& [name, value] : params) {
        std::vector<std::size_t> coords(value.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (value.size() > options.full_check_limit) {
            std::shuffle(coords.begin(), coords.end(), rng.engine());
            coords.resize(options.sampled_coordinates);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t i : coords) {
            NumArray& slot = probe.get_mut(name);
            const double original = slot[i];
            slot[i] = original + options.step;
            const double up = evaluate(f, probe);
            probe.get_mut(name)[i] = original - options.step;
            const double down = evaluate(f, probe);
            probe.get_mut(name)[i] = original;

            const double numeric = (up - down) / (2.0 * options.step);
            const double exact = analytic.at(name)[i];
            const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
            const double err = std::abs(exact - numeric) / denom;
            ++result.coordinates_checked;
            if (result.worst_parameter.empty() || err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_parameter = name;
                result.worst_index = i;
                result.worst_analytic = exact;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace ldif::nn
