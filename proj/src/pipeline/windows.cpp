#include "ldif/pipeline/windows.hpp"

#include "ldif/error.hpp"

namespace ldif::pipeline {

std::vector<std::size_t> split_windows(std::size_t length, std::size_t window, std::size_t stride) {
    if (window == 0 || stride == 0) throw ConfigError("split_windows: window and stride must be positive");
    if (stride > window) throw ConfigError("split_windows: stride larger than window leaves gaps");
    if (length < window) {
        throw DataError("split_windows: sequence of " + std::to_string(length) + " frames is shorter than window " +
                        std::to_string(window));
    }
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + window <= length; s += stride) starts.push_back(s);
    if (starts.back() + window < length) starts.push_back(length - window);
    return starts;
}

namespace {

void check_coverage(std::span<const std::size_t> starts, std::size_t window, std::size_t total_len) {
    if (starts.empty()) throw DataError("stitch: no clips");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (i && starts[i] < starts[i - 1]) throw DataError("stitch: clip starts must be non-decreasing");
        if (starts[i] > covered) {
            throw DataError("stitch: coverage gap over frames [" + std::to_string(covered) + ", " +
                            std::to_string(starts[i]) + ")");
        }
        covered = std::max(covered, starts[i] + window);
    }
    if (covered < total_len) {
        throw DataError("stitch: coverage gap over frames [" + std::to_string(covered) + ", " +
                        std::to_string(total_len) + ")");
    }
    if (covered > total_len) throw DataError("stitch: clips extend past the sequence end");
}

}  // namespace

NumArray stitch_weights(std::span<const std::size_t> starts, std::size_t window, std::size_t total_len) {
    check_coverage(starts, window, total_len);
    NumArray weights({starts.size(), total_len});
    std::size_t merged_end = 0;
    for (std::size_t c = 0; c < starts.size(); ++c) {
        const std::size_t s = starts[c];
        const std::size_t overlap = merged_end > s ? merged_end - s : 0;
        for (std::size_t j = 0; j < window; ++j) {
            const std::size_t f = s + j;
            if (j < overlap) {
                const double w_new = static_cast<double>(j + 1) / static_cast<double>(overlap + 1);
                for (std::size_t prev = 0; prev < c; ++prev) weights(prev, f) *= 1.0 - w_new;
                weights(c, f) = w_new;
            } else {
                weights(c, f) = 1.0;
            }
        }
        merged_end = std::max(merged_end, s + window);
    }
    return weights;
}

NumArray stitch_windows(std::span<const NumArray> clips, std::span<const std::size_t> starts, std::size_t total_len) {
    if (clips.size() != starts.size()) throw DataError("stitch: clip and start counts differ");
    if (clips.empty()) throw DataError("stitch: no clips");
    const std::size_t window = clips[0].rows(), channels = clips[0].cols();
    for (const auto& c : clips) {
        if (c.rows() != window || c.cols() != channels) throw ShapeError("stitch: clips must share one shape");
    }
    const NumArray weights = stitch_weights(starts, window, total_len);
    NumArray out({total_len, channels});
    for (std::size_t c = 0; c < clips.size(); ++c) {
        for (std::size_t j = 0; j < window; ++j) {
            const std::size_t f = starts[c] + j;
            const double w = weights(c, f);
            for (std::size_t ch = 0; ch < channels; ++ch) out(f, ch) += w * clips[c](j, ch);
        }
    }
    return out;
}

NumArray concatenate_windows(std::span<const NumArray> clips, std::span<const std::size_t> starts,
                             std::size_t total_len) {
    if (clips.size() != starts.size() || clips.empty()) throw DataError("concatenate: clip and start counts differ");
    const std::size_t window = clips[0].rows(), channels = clips[0].cols();
    check_coverage(starts, window, total_len);
    NumArray out({total_len, channels});
    for (std::size_t c = 0; c < clips.size(); ++c) {
        for (std::size_t j = 0; j < window; ++j) {
            for (std::size_t ch = 0; ch < channels; ++ch) out(starts[c] + j, ch) = clips[c](j, ch);
        }
    }
    return out;
}

}  // namespace ldif::pipeline
