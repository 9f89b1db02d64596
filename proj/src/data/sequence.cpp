#include "ldif/data/sequence.hpp"

#include <cmath>
#include <numbers>

#include "ldif/error.hpp"

namespace ldif::data {

std::string_view to_string(Attitude a) {
    switch (a) {
        case Attitude::positive:
            return "positive";
        case Attitude::neutral:
            return "neutral";
        case Attitude::negative:
            return "negative";
    }
    return "unknown";
}

Attitude parse_attitude(std::string_view text) {
    if (text == "positive") return Attitude::positive;
    if (text == "neutral") return Attitude::neutral;
    if (text == "negative") return Attitude::negative;
    throw ConfigError("unknown attitude '" + std::string(text) + "' (expected positive, neutral or negative)");
}

NumArray one_hot(Attitude a) {
    NumArray out({3});
    out[static_cast<std::size_t>(a)] = 1.0;
    return out;
}

CoefficientFrame frame_at(const NumArray& sequence, std::size_t k, const SequenceDims& dims) {
    if (k >= sequence.rows()) throw IndexError("frame " + std::to_string(k) + " out of range");
    auto row = sequence.row(k);
    CoefficientFrame f;
    f.angle.assign(row.begin(), row.begin() + 3);
    f.expression.assign(row.begin() + 3, row.begin() + static_cast<std::ptrdiff_t>(dims.trans_offset()));
    f.translation.assign(row.begin() + static_cast<std::ptrdiff_t>(dims.trans_offset()), row.end());
    return f;
}

void DialoguePair::validate() const {
    const std::size_t n = listener.rows();
    auto check = [&](const NumArray& a, std::size_t cols, const char* what) {
        if (a.rank() != 2 || a.rows() != n || a.cols() != cols) {
            throw DataError(std::string("dialogue pair: ") + what + " has shape " + nn::shape_string(a.shape()) +
                            ", expected [" + std::to_string(n) + ", " + std::to_string(cols) + "]");
        }
        if (!a.all_finite()) throw DataError(std::string("dialogue pair: ") + what + " has non-finite values");
    };
    if (listener.rank() != 2 || n == 0) throw DataError("dialogue pair: listener sequence is empty");
    check(listener, dims.coeff_dim(), "listener");
    check(speaker_motion, dims.coeff_dim(), "speaker motion");
    check(speaker_audio, dims.audio_dim, "speaker audio");
    if (identity.size() != dims.identity_dim) throw DataError("dialogue pair: identity has wrong dimension");
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t c = 0; c < SequenceDims::kAngleDim; ++c) {
            if (std::abs(listener(k, c)) > std::numbers::pi || std::abs(speaker_motion(k, c)) > std::numbers::pi) {
                throw DataError("dialogue pair: angle outside [-pi, pi] at frame " + std::to_string(k));
            }
        }
    }
}

}  // namespace ldif::data
