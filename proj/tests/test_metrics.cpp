#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "semdepth/metrics.hpp"

using namespace semdepth;

namespace {

DepthMap row(std::vector<float> v) {
    const int n = static_cast<int>(v.size());
    return DepthMap(1, n, std::move(v), std::vector<std::uint8_t>(n, 1));
}

}  // namespace

TEST(DepthMetrics, PerfectPrediction) {
    const auto gt = row({1.0F, 5.0F, 40.0F, 99.0F});
    const auto m = depth_metrics(gt, gt);
    for (double v : {m.mape, m.mspe, m.rmse, m.rmse_log, m.log10, m.silog}) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(m.delta1, 1.0);
    EXPECT_EQ(m.delta2, 1.0);
    EXPECT_EQ(m.delta3, 1.0);
    EXPECT_EQ(m.n_valid_pixels, 4u);
}

TEST(DepthMetrics, TwoPixelHandOracle) {
    const auto m = depth_metrics(row({2.0F, 4.0F}), row({1.0F, 4.0F}));
    EXPECT_DOUBLE_EQ(m.mape, 50.0);
    EXPECT_DOUBLE_EQ(m.mspe, 50.0);
    EXPECT_DOUBLE_EQ(m.delta1, 0.5);
    EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(0.5));
}

TEST(DepthMetrics, ScaledPredictionHasZeroSilog) {
    const auto gt = row({1.5F, 3.0F, 7.0F});
    const auto m = depth_metrics(row({4.5F, 9.0F, 21.0F}), gt);
    EXPECT_NEAR(m.silog, 0.0, 1e-12);
    EXPECT_GT(m.mape, 0.0);
}

TEST(DepthMetrics, MatchesFlatOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 8);
        const int w = 1 + static_cast<int>(rng() % 8);
        const auto gt = oracle::random_depth(rng, h, w, 0.5, 90, 0.7);
        const auto pred = oracle::random_depth(rng, h, w, 0.5, 90, 1.0);
        std::vector<double> y, t;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (!gt.valid(r, c)) continue;
                y.push_back(pred.value(r, c));
                t.push_back(gt.value(r, c));
            }
        }
        const auto o = oracle::depth_metrics(y, t);
        const auto m = depth_metrics(pred, gt);
        EXPECT_TRUE(nearly_equal(m.mape, o.mape));
        EXPECT_TRUE(nearly_equal(m.mspe, o.mspe));
        EXPECT_TRUE(nearly_equal(m.rmse, o.rmse));
        EXPECT_TRUE(nearly_equal(m.rmse_log, o.rmse_log));
        EXPECT_TRUE(nearly_equal(m.log10, o.log10));
        EXPECT_EQ(m.delta1, o.delta1);
        EXPECT_EQ(m.delta2, o.delta2);
        EXPECT_EQ(m.delta3, o.delta3);
        EXPECT_NEAR(m.silog, std::max(0.0, o.silog), 1e-12);
    }
}

TEST(DepthMetrics, PixelWeightedAcrossFrames) {
    // 1 + 3 valid pixels aggregate like one 4-pixel vector.
    DepthMap gt1(1, 2, {2.0F, 9.0F}, {1, 0});
    DepthMap gt2(1, 3, {1.0F, 4.0F, 8.0F}, {1, 1, 1});
    const auto p1 = row({3.0F, 1.0F});
    const auto p2 = row({1.5F, 4.0F, 6.0F});
    DepthMetricAccumulator acc;
    acc.add(p1, gt1);
    acc.add(p2, gt2);
    const auto m = acc.report();
    const auto o = oracle::depth_metrics({3, 1.5, 4, 6}, {2, 1, 4, 8});
    EXPECT_EQ(m.n_valid_pixels, 4u);
    EXPECT_TRUE(nearly_equal(m.mape, o.mape));
    EXPECT_TRUE(nearly_equal(m.rmse_log, o.rmse_log));

    DepthMetricAccumulator a, b;
    a.add(p1, gt1);
    b.add(p2, gt2);
    a.merge(b);
    EXPECT_EQ(a.report().csv_row(), m.csv_row());
}

TEST(DepthMetrics, ClampsNonPositivePredictions) {
    const auto m = depth_metrics(row({0.0F, -2.0F, 1.0F}), row({1.0F, 1.0F, 1.0F}));
    EXPECT_EQ(m.n_clamped, 2u);
    EXPECT_TRUE(std::isfinite(m.rmse_log));
    // The linear terms see the raw values.
    EXPECT_DOUBLE_EQ(m.mape, 400.0 / 3.0);
}

TEST(DepthMetrics, Errors) {
    DepthMap none(1, 2);
    EXPECT_THROW((void)depth_metrics(row({1.0F, 2.0F}), none), std::domain_error);
    EXPECT_THROW((void)depth_metrics(row({1.0F}), row({1.0F, 2.0F})), std::invalid_argument);
    DepthMap zero(1, 1, {0.0F}, {1});
    EXPECT_THROW((void)depth_metrics(row({1.0F}), zero), std::invalid_argument);
}

TEST(DepthMetrics, ReportAccessors) {
    const auto m = depth_metrics(row({2.0F, 4.0F}), row({1.0F, 4.0F}));
    EXPECT_EQ(m.get("mape"), m.mape);
    EXPECT_EQ(m.get("delta3"), m.delta3);
    EXPECT_THROW((void)m.get("abs_rel"), std::out_of_range);
    EXPECT_EQ(MetricReport::names().size(), 9u);
    EXPECT_EQ(MetricReport::csv_header().substr(0, 10), "mape,mspe,");
}

TEST(Iou, IdenticalAndDisjoint) {
    std::mt19937_64 rng(2);
    const auto labels = oracle::random_labels(rng, 36, 4);
    const auto m = SemanticLabelMap::one_hot(6, 6, 4, labels);
    for (double v : iou_per_class(m, m).per_class) EXPECT_EQ(v, 1.0);

    const auto a = SemanticLabelMap::one_hot(1, 4, 2, std::vector<int>{1, 1, 0, 0});
    const auto b = SemanticLabelMap::one_hot(1, 4, 2, std::vector<int>{0, 0, 1, 1});
    const auto r = iou_per_class(a, b);
    EXPECT_EQ(r.per_class[0], 0.0);
    EXPECT_EQ(r.per_class[1], 0.0);
}

TEST(Iou, CountByHand) {
    // Prediction marks 2 pixels of class 1, truth 1 of them.
    const auto pred = SemanticLabelMap::one_hot(2, 2, 2, std::vector<int>{1, 1, 0, 0});
    const auto gt = SemanticLabelMap::one_hot(2, 2, 2, std::vector<int>{1, 0, 0, 0});
    const auto r = iou_per_class(pred, gt);
    EXPECT_DOUBLE_EQ(r.per_class[1], 0.5);
    EXPECT_DOUBLE_EQ(r.per_class[0], 2.0 / 3.0);
}

TEST(Iou, AbsentClassesAndMeans) {
    const auto m = SemanticLabelMap::one_hot(1, 2, 3, std::vector<int>{0, 1});
    const auto r = iou_per_class(m, m);
    EXPECT_TRUE(r.absent[2]);
    EXPECT_EQ(r.per_class[2], 1.0);
    EXPECT_EQ(r.mean_present(), 1.0);

    IouAccumulator acc(3);
    acc.add_labels(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 2});
    const auto res = acc.result();
    EXPECT_DOUBLE_EQ(res.per_class[1], 0.5);
    EXPECT_DOUBLE_EQ(res.per_class[2], 0.0);
    EXPECT_DOUBLE_EQ(res.mean_present(), 0.5);
    EXPECT_THROW(acc.add_labels(std::vector<int>{3}, std::vector<int>{0}), std::out_of_range);
}

TEST(NearlyEqual, RelativeAndAbsolute) {
    EXPECT_TRUE(nearly_equal(1e6, 1e6 + 1e-4));
    EXPECT_FALSE(nearly_equal(1.0, 1.0 + 1e-6));
    EXPECT_TRUE(nearly_equal(0.0, 1e-15));
}
