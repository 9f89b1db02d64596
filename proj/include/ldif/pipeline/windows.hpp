#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ldif/nn/array.hpp"

namespace ldif::pipeline {

using nn::NumArray;

/// Window starts 0, stride, 2·stride, … plus a final right-aligned window at
/// length − window when the regular grid leaves a tail uncovered.
std::vector<std::size_t> split_windows(std::size_t length, std::size_t window, std::size_t stride);

/// Per-clip blend weights, [clips, total_len]. Clips are merged left to right;
/// where a clip overlaps the frames merged so far over m frames, the new clip
/// gets weight (j+1)/(m+1) at overlap frame j and the merged result keeps the
/// rest. Every frame's weights sum to 1.
NumArray stitch_weights(std::span<const std::size_t> starts, std::size_t window, std::size_t total_len);

/// Crossfades [window, channels] clips placed at `starts` into one
/// [total_len, channels] sequence.
NumArray stitch_windows(std::span<const NumArray> clips, std::span<const std::size_t> starts, std::size_t total_len);

/// Hard cut reference: every frame is taken from the latest-starting clip
/// that covers it.
NumArray concatenate_windows(std::span<const NumArray> clips, std::span<const std::size_t> starts,
                             std::size_t total_len);

}  // namespace ldif::pipeline
