#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "semdepth/core.hpp"

namespace semdepth {

/// Predictions at or below zero are raised to this value before log and ratio terms.
inline constexpr double kMinPredictedDepth = 1e-3;

struct MetricReport {
    double mape = 0.0;      ///< percent
    double mspe = 0.0;      ///< percent (squared error over truth)
    double rmse = 0.0;      ///< meters
    double rmse_log = 0.0;  ///< natural log
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    double silog = 0.0;
    std::size_t n_valid_pixels = 0;
    std::size_t n_clamped = 0;  ///< valid pixels whose prediction was clamped

    /// Metric names in report order; also the CSV header (plus n_valid_pixels, n_clamped).
    [[nodiscard]] static const std::vector<std::string>& names();
    [[nodiscard]] static std::string csv_header();
    [[nodiscard]] std::string csv_row() const;
    [[nodiscard]] std::vector<double> values() const;
    /// Value by name; throws std::out_of_range for unknown names.
    [[nodiscard]] double get(const std::string& name) const;
};

/// Running sums of every per-pixel term, so frames of any size aggregate pixel-weighted.
class DepthMetricAccumulator {
public:
    /// Adds pixels valid in `gt` (and in `pred`). Throws on extent mismatch or gt ≤ 0 inside the mask.
    void add(const DepthMap& pred, const DepthMap& gt);
    void add_pixel(double y, double y_star);
    void merge(const DepthMetricAccumulator& other);

    [[nodiscard]] std::size_t count() const { return n_; }
    /// Throws std::domain_error when no pixel was added.
    [[nodiscard]] MetricReport report() const;

private:
    std::size_t n_ = 0;
    std::size_t clamped_ = 0;
    double abs_rel_ = 0.0;
    double sq_rel_ = 0.0;
    double sq_ = 0.0;
    double sq_log_ = 0.0;
    double abs_log10_ = 0.0;
    std::array<std::size_t, 3> delta_{};
    double d_ = 0.0;
    double d2_ = 0.0;
};

[[nodiscard]] MetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt);

struct IouResult {
    std::vector<double> per_class;
    std::vector<bool> absent;  ///< class appears in neither map; reported as 1.0

    /// Mean over classes present in at least one map (1.0 when none are).
    [[nodiscard]] double mean_present() const;
    /// Mean over all classes, absent ones counting 1.0.
    [[nodiscard]] double mean_all() const;
};

/// Hard IoU of argmax-binarized maps. Counts accumulate across calls through IouAccumulator.
[[nodiscard]] IouResult iou_per_class(const SemanticLabelMap& pred, const SemanticLabelMap& gt);

class IouAccumulator {
public:
    explicit IouAccumulator(int n_classes) : inter_(n_classes, 0), uni_(n_classes, 0) {}
    void add(const SemanticLabelMap& pred, const SemanticLabelMap& gt);
    /// Per-pixel class indices of prediction and truth.
    void add_labels(std::span<const int> pred, std::span<const int> gt);
    [[nodiscard]] IouResult result() const;

private:
    std::vector<std::size_t> inter_;
    std::vector<std::size_t> uni_;
};

/// |a−b| ≤ rel·max(|a|,|b|) + abs.
[[nodiscard]] bool nearly_equal(double a, double b, double rel = 1e-9, double abs = 1e-14);

}  // namespace semdepth
