#include "ldif/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "ldif/error.hpp"
#include "ldif/rng.hpp"

namespace ldif::eval {

namespace {

constexpr std::size_t kAngles = data::SequenceDims::kAngleDim;
constexpr std::size_t kMinPerAttitude = 10;

double group_distance(const NumArray& gen, const NumArray& gt, std::size_t begin, std::size_t count) {
    double total = 0.0;
    for (std::size_t k = 0; k < gen.rows(); ++k) {
        for (std::size_t c = begin; c < begin + count; ++c) total += std::abs(gen(k, c) - gt(k, c));
    }
    return 100.0 * total / static_cast<double>(gen.rows() * count);
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size()); }

double channel_mean(const NumArray& seq, std::size_t channel) {
    double total = 0.0;
    for (std::size_t k = 0; k < seq.rows(); ++k) total += seq(k, channel);
    return total / double(seq.rows());
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

FeatureDistance feature_distance(const NumArray& gen, const NumArray& gt, const data::SequenceDims& dims) {
    if (gen.rows() != gt.rows()) {
        throw DataError("feature_distance: generated sequence has " + std::to_string(gen.rows()) +
                        " frames, ground truth " + std::to_string(gt.rows()));
    }
    if (gen.cols() != dims.coeff_dim() || gt.cols() != dims.coeff_dim()) {
        throw DataError("feature_distance: expected " + std::to_string(dims.coeff_dim()) + " channels");
    }
    return {group_distance(gen, gt, dims.angle_offset(), kAngles),
            group_distance(gen, gt, dims.expr_offset(), dims.expr_dim),
            group_distance(gen, gt, dims.trans_offset(), data::SequenceDims::kTransDim)};
}

double diversity(const std::vector<NumArray>& samples) {
    if (samples.size() < 2) throw DataError("diversity: need at least 2 samples, got " + std::to_string(samples.size()));
    const std::size_t n = samples[0].rows();
    for (const auto& s : samples) {
        if (s.rows() != n || s.cols() < kAngles) throw DataError("diversity: samples must share one length");
    }
    const double count = double(samples.size());
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t c = 0; c < kAngles; ++c) {
            // Deviations are taken relative to the first sample so identical
            // samples give exactly zero.
            const double ref = samples[0](k, c);
            double m = 0.0;
            for (const auto& s : samples) m += s(k, c) - ref;
            m /= count;
            double var = 0.0;
            for (const auto& s : samples) var += (s(k, c) - ref - m) * (s(k, c) - ref - m);
            total += std::sqrt(var / count);
        }
    }
    return total / double(n * kAngles);
}

double smoothness(const NumArray& seq) {
    if (seq.rows() < 2) throw DataError("smoothness: need at least 2 frames");
    double worst = 0.0;
    for (std::size_t k = 1; k < seq.rows(); ++k) {
        for (std::size_t c = 0; c < kAngles; ++c) worst = std::max(worst, std::abs(seq(k, c) - seq(k - 1, c)));
    }
    return worst;
}

double permutation_test(const std::vector<double>& a, const std::vector<double>& b, std::size_t permutations,
                        std::uint64_t seed) {
    if (a.empty() || b.empty()) throw DataError("permutation_test: both groups must be non-empty");
    if (permutations == 0) throw ConfigError("permutation_test: need at least one permutation");
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    const double na = double(a.size()), nb = double(b.size());
    auto gap = [&](const std::vector<double>& v) {
        const double sa = std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
        return std::abs(sa / na - (total - sa) / nb);
    };
    const double observed = gap(pooled);
    // Guards against rounding in the recomputed sums flipping exact ties.
    const double tol = 1e-12 * (1.0 + observed);
    Rng rng(seed);
    std::size_t extreme = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        std::shuffle(pooled.begin(), pooled.end(), rng.engine());
        if (gap(pooled) >= observed - tol) ++extreme;
    }
    return double(extreme + 1) / double(permutations + 1);
}

Separability attitude_separability(const std::map<data::Attitude, std::vector<NumArray>>& by_attitude,
                                   const data::SequenceDims& dims, std::size_t permutations, std::uint64_t seed) {
    auto count = [&](data::Attitude a) {
        auto it = by_attitude.find(a);
        return it == by_attitude.end() ? 0 : it->second.size();
    };
    if (count(data::Attitude::positive) < kMinPerAttitude || count(data::Attitude::negative) < kMinPerAttitude) {
        throw DataError("attitude_separability: need at least 10 positive and 10 negative sequences, got " +
                        std::to_string(count(data::Attitude::positive)) + " and " +
                        std::to_string(count(data::Attitude::negative)));
    }
    auto split = [&](data::Attitude target, std::size_t channel) {
        std::pair<std::vector<double>, std::vector<double>> groups;
        for (const auto& [attitude, seqs] : by_attitude) {
            for (const auto& s : seqs) {
                (attitude == target ? groups.first : groups.second).push_back(channel_mean(s, channel));
            }
        }
        return groups;
    };
    Separability out;
    const auto [pos, not_pos] = split(data::Attitude::positive, dims.expr_offset() + 0);
    const auto [neg, not_neg] = split(data::Attitude::negative, dims.expr_offset() + 1);
    out.gap_smile = mean(pos) - mean(not_pos);
    out.gap_frown = mean(neg) - mean(not_neg);
    out.p_smile = permutation_test(pos, not_pos, permutations, derive_seed(seed, "smile"));
    out.p_frown = permutation_test(neg, not_neg, permutations, derive_seed(seed, "frown"));
    out.p_value = std::min(out.p_smile, out.p_frown);
    return out;
}

std::string report_tsv(const MetricReport& r) {
    return "fd_angle\tfd_exp\tfd_trans\tdiversity\tseparability_p\tsmoothness\tn_sequences\n" + fmt(r.fd_angle) +
           '\t' + fmt(r.fd_exp) + '\t' + fmt(r.fd_trans) + '\t' + fmt(r.diversity) + '\t' + fmt(r.separability_p) +
           '\t' + fmt(r.smoothness) + '\t' + std::to_string(r.n_sequences) + '\n';
}

std::string report_summary(const MetricReport& r) {
    std::string out;
    out += "sequences        " + std::to_string(r.n_sequences) + "\n";
    out += "FD angle (x100)  " + fmt(r.fd_angle) + "\n";
    out += "FD exp (x100)    " + fmt(r.fd_exp) + "\n";
    out += "FD trans (x100)  " + fmt(r.fd_trans) + "\n";
    out += "diversity        " + fmt(r.diversity) + "\n";
    out += "separability p   " + (std::isnan(r.separability_p) ? std::string("n/a (fewer than 10 per attitude)")
                                                               : fmt(r.separability_p)) + "\n";
    out += "smoothness       " + fmt(r.smoothness) + "\n";
    return out;
}

std::string channel_plot_svg(const NumArray& seq, const std::vector<std::size_t>& channels,
                             const std::vector<std::string>& labels, const std::string& title) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const double width = 720, height = 320, margin = 40;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t c : channels) {
        if (c >= seq.cols()) throw IndexError("plot: channel " + std::to_string(c) + " out of range");
        for (std::size_t k = 0; k < seq.rows(); ++k) {
            lo = std::min(lo, seq(k, c));
            hi = std::max(hi, seq(k, c));
        }
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    auto x_of = [&](std::size_t k) {
        return margin + (width - 2 * margin) * double(k) / double(std::max<std::size_t>(1, seq.rows() - 1));
    };
    auto y_of = [&](double v) { return height - margin - (height - 2 * margin) * (v - lo) / (hi - lo); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"320\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"40\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
    svg += "<text x=\"4\" y=\"" + fmt(y_of(hi)) + "\" font-size=\"10\">" + fmt(hi) + "</text>\n";
    svg += "<text x=\"4\" y=\"" + fmt(y_of(lo)) + "\" font-size=\"10\">" + fmt(lo) + "</text>\n";
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const char* color = kColors[i % 6];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t k = 0; k < seq.rows(); ++k) {
            svg += fmt(x_of(k)) + "," + fmt(y_of(seq(k, channels[i]))) + " ";
        }
        svg += "\"/>\n";
        const std::string label = i < labels.size() ? labels[i] : "ch" + std::to_string(channels[i]);
        svg += "<text x=\"" + fmt(width - 120) + "\" y=\"" + fmt(40 + 14 * double(i)) + "\" font-size=\"11\" fill=\"" +
               color + "\">" + label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace ldif::eval
