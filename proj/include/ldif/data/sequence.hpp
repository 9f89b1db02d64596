#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ldif/nn/array.hpp"

namespace ldif::data {

using nn::NumArray;

enum class Attitude { positive = 0, neutral = 1, negative = 2 };

std::string_view to_string(Attitude a);
Attitude parse_attitude(std::string_view text);
/// One-hot [3] in the order positive, neutral, negative.
NumArray one_hot(Attitude a);

/// Channel layout of a coefficient frame: angle(3) | expression(E) | translation(3).
/// Angle order is pitch, yaw, roll. Expression channel 0 is the smile proxy
/// and channel 1 the frown proxy.
struct SequenceDims {
    std::size_t expr_dim = 8;
    std::size_t identity_dim = 32;
    std::size_t audio_dim = 45;

    static constexpr std::size_t kAngleDim = 3;
    static constexpr std::size_t kTransDim = 3;

    std::size_t coeff_dim() const noexcept { return kAngleDim + expr_dim + kTransDim; }
    std::size_t angle_offset() const noexcept { return 0; }
    std::size_t expr_offset() const noexcept { return kAngleDim; }
    std::size_t trans_offset() const noexcept { return kAngleDim + expr_dim; }

    friend bool operator==(const SequenceDims&, const SequenceDims&) = default;
};

struct CoefficientFrame {
    std::vector<double> angle;        // radians, |·| ≤ π
    std::vector<double> expression;   // unitless
    std::vector<double> translation;  // normalised screen units
};

CoefficientFrame frame_at(const NumArray& sequence, std::size_t k, const SequenceDims& dims);

/// A speaker/listener recording at a fixed frame rate. All per-frame arrays
/// share the same row count.
struct DialoguePair {
    SequenceDims dims;
    double fps = 30.0;
    Attitude attitude = Attitude::neutral;
    std::uint32_t listener_id = 0;
    NumArray identity;        // [D_id]
    NumArray speaker_motion;  // [n, coeff_dim]
    NumArray speaker_audio;   // [n, audio_dim]
    NumArray listener;        // [n, coeff_dim]

    std::size_t length() const noexcept { return listener.rows(); }
    /// Throws DataError on inconsistent shapes or non-finite values.
    void validate() const;

    friend bool operator==(const DialoguePair&, const DialoguePair&) = default;
};

}  // namespace ldif::data
