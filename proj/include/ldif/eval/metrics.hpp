#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldif/data/sequence.hpp"

namespace ldif::eval {

using nn::NumArray;

/// Mean absolute difference ×100 per channel group.
struct FeatureDistance {
    double angle = 0.0;
    double exp = 0.0;
    double trans = 0.0;
};

/// gen and gt are [n, D] coefficient sequences with the layout of `dims`.
FeatureDistance feature_distance(const NumArray& gen, const NumArray& gt, const data::SequenceDims& dims);

/// Standard deviation across samples (population form, divisor N) per frame
/// and angle channel, averaged over frames and the three angle channels.
double diversity(const std::vector<NumArray>& samples);

/// Largest absolute frame-to-frame change over the angle channels.
double smoothness(const NumArray& seq);

/// Two-sided permutation test on the difference of means of two scalar
/// samples. p = (1 + #{|permuted gap| ≥ |observed gap|}) / (1 + permutations).
double permutation_test(const std::vector<double>& a, const std::vector<double>& b, std::size_t permutations,
                        std::uint64_t seed);

struct Separability {
    double p_value = 1.0;  // min(p_smile, p_frown)
    double p_smile = 1.0;  // expression channel 0, positive vs the rest
    double p_frown = 1.0;  // expression channel 1, negative vs the rest
    double gap_smile = 0.0;  // mean(channel 0 | positive) − mean(channel 0 | rest)
    double gap_frown = 0.0;  // mean(channel 1 | negative) − mean(channel 1 | rest)
};

/// Per-sequence channel means compared across attitude groups. Requires at
/// least 10 positive and 10 negative sequences.
Separability attitude_separability(const std::map<data::Attitude, std::vector<NumArray>>& by_attitude,
                                   const data::SequenceDims& dims, std::size_t permutations = 10000,
                                   std::uint64_t seed = 0);

struct MetricReport {
    double fd_angle = 0.0, fd_exp = 0.0, fd_trans = 0.0;
    double diversity = 0.0;
    /// NaN when fewer than 10 positive or negative sequences were given.
    double separability_p = 0.0;
    double smoothness = 0.0;
    std::size_t n_sequences = 0;
};

/// Header line plus one value line, tab-separated.
std::string report_tsv(const MetricReport& report);
std::string report_summary(const MetricReport& report);

/// Self-contained SVG line plot of the given channels of `seq` (one polyline
/// per channel).
std::string channel_plot_svg(const NumArray& seq, const std::vector<std::size_t>& channels,
                             const std::vector<std::string>& labels, const std::string& title);

}  // namespace ldif::eval
