#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ldif/diffusion/diffusion.hpp"
#include "ldif/error.hpp"
#include "ldif/eval/metrics.hpp"

using namespace ldif;
using namespace ldif::eval;

namespace {

const data::SequenceDims kDims{};  // 3 + 8 + 3 channels

NumArray random_seq(Rng& rng, std::size_t frames, double scale = 0.1) {
    NumArray s = diffusion::standard_normal(rng, {frames, kDims.coeff_dim()});
    for (double& v : s.values()) v *= scale;
    return s;
}

}  // namespace

TEST_CASE("feature_distance examples") {
    Rng rng(41);
    const NumArray gt = random_seq(rng, 30);
    const FeatureDistance same = feature_distance(gt, gt, kDims);
    CHECK(same.angle == 0.0);
    CHECK(same.exp == 0.0);
    CHECK(same.trans == 0.0);

    const NumArray zero({30, kDims.coeff_dim()});
    NumArray gen = zero;
    for (std::size_t k = 0; k < 30; ++k) {
        for (std::size_t c = 0; c < 3; ++c) gen(k, c) = 0.05;
    }
    const FeatureDistance fd = feature_distance(gen, zero, kDims);
    CHECK(fd.angle == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(fd.exp == 0.0);
    CHECK(fd.trans == 0.0);

    CHECK_THROWS_AS(feature_distance(random_seq(rng, 29), gt, kDims), DataError);
}

TEST_CASE("feature_distance is a scaled L1 metric per group") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const NumArray a = random_seq(rng, 20), b = random_seq(rng, 20), c = random_seq(rng, 20);
        const auto ab = feature_distance(a, b, kDims), ba = feature_distance(b, a, kDims);
        const auto ac = feature_distance(a, c, kDims), cb = feature_distance(c, b, kDims);
        CHECK(ab.angle == ba.angle);
        CHECK(ab.exp == ba.exp);
        CHECK(ab.trans == ba.trans);
        CHECK(ab.angle <= ac.angle + cb.angle + 1e-12);
        CHECK(ab.exp <= ac.exp + cb.exp + 1e-12);
        CHECK(ab.trans <= ac.trans + cb.trans + 1e-12);
    }
}

TEST_CASE("diversity examples") {
    Rng rng(43);
    const NumArray s = random_seq(rng, 25);
    CHECK(diversity({s, s, s}) == 0.0);

    // Two samples apart by c in one angle channel: std c/2 on that channel,
    // averaged over the three angle channels.
    NumArray t = s;
    const double c = 0.3;
    for (std::size_t k = 0; k < 25; ++k) t(k, 1) += c;
    CHECK(std::abs(diversity({s, t}) - c / 2.0 / 3.0) < 1e-12);

    CHECK_THROWS_AS(diversity({s}), DataError);
    CHECK_THROWS_AS(diversity({s, random_seq(rng, 24)}), DataError);
}

TEST_CASE("diversity ignores sample order") {
    Rng rng(44);
    std::vector<NumArray> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(random_seq(rng, 15));
    const double base = diversity(samples);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(samples.begin(), samples.end(), rng.engine());
        CHECK(std::abs(diversity(samples) - base) < 1e-12);
    }
}

TEST_CASE("permutation test is calibrated under the null") {
    Rng rng(45);
    int small = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a(10), b(10);
        for (double& v : a) v = rng.normal();
        for (double& v : b) v = rng.normal();
        if (permutation_test(a, b, 10000, std::uint64_t(rep)) < 0.05) ++small;
    }
    CAPTURE(small);
    CHECK(small >= 1);
    CHECK(small <= 12);

    const std::vector<double> a{1.0, 2.0, 3.0}, b{1.5, 2.5};
    CHECK(permutation_test(a, b, 500, 3) == permutation_test(a, b, 500, 3));
    CHECK(permutation_test(a, a, 500, 3) == 1.0);
    CHECK_THROWS_AS(permutation_test({}, b, 10, 1), DataError);
    CHECK_THROWS_AS(permutation_test(a, b, 0, 1), ConfigError);
}

TEST_CASE("attitude separability examples") {
    Rng rng(46);
    auto group = [&](double smile, double frown) {
        std::vector<NumArray> out;
        for (int i = 0; i < 10; ++i) {
            NumArray s = random_seq(rng, 30, 0.02);
            for (std::size_t k = 0; k < 30; ++k) {
                s(k, kDims.expr_offset()) += smile;
                s(k, kDims.expr_offset() + 1) += frown;
            }
            out.push_back(std::move(s));
        }
        return out;
    };
    std::map<data::Attitude, std::vector<NumArray>> shifted{{data::Attitude::positive, group(0.6, 0.0)},
                                                            {data::Attitude::negative, group(0.0, 0.0)}};
    const Separability sep = attitude_separability(shifted, kDims);
    CHECK(sep.p_smile < 1e-3);
    CHECK(sep.p_value <= sep.p_smile);
    CHECK(sep.gap_smile == doctest::Approx(0.6).epsilon(0.02));

    const auto same = group(0.1, -0.1);
    const Separability flat =
        attitude_separability({{data::Attitude::positive, same}, {data::Attitude::negative, same}}, kDims, 1000);
    CHECK(flat.gap_smile == 0.0);
    CHECK(flat.gap_frown == 0.0);

    std::map<data::Attitude, std::vector<NumArray>> few{{data::Attitude::positive, group(0, 0)},
                                                        {data::Attitude::negative, {random_seq(rng, 30)}}};
    CHECK_THROWS_AS(attitude_separability(few, kDims), DataError);

    // Null calibration through the separability statistic.
    int small = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::map<data::Attitude, std::vector<NumArray>> null{{data::Attitude::positive, group(0, 0)},
                                                             {data::Attitude::negative, group(0, 0)}};
        if (attitude_separability(null, kDims, 2000, std::uint64_t(rep)).p_smile < 0.05) ++small;
    }
    CAPTURE(small);
    CHECK(small >= 1);
    CHECK(small <= 12);
}

TEST_CASE("smoothness examples") {
    const NumArray flat({10, kDims.coeff_dim()}, 0.4);
    CHECK(smoothness(flat) == 0.0);
    NumArray step = flat;
    for (std::size_t k = 5; k < 10; ++k) step(k, 0) += 0.1;
    CHECK(smoothness(step) == doctest::Approx(0.1).epsilon(1e-12));
    // Non-angle channels do not count.
    NumArray expr = flat;
    expr(3, 4) = 9.0;
    CHECK(smoothness(expr) == 0.0);
}

TEST_CASE("reports") {
    MetricReport r;
    r.fd_angle = 4.5;
    r.diversity = 0.04;
    r.separability_p = std::nan("");
    r.n_sequences = 12;
    const std::string tsv = report_tsv(r);
    CHECK(tsv.rfind("fd_angle\tfd_exp\tfd_trans\tdiversity\tseparability_p\tsmoothness\tn_sequences\n", 0) == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 2);
    CHECK(report_summary(r).find("n/a") != std::string::npos);

    Rng rng(47);
    const std::string svg = channel_plot_svg(random_seq(rng, 20), {0, 3}, {"pitch", "smile"}, "sample");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}
