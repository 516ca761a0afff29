#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "semdepth/adapt.hpp"
#include "semdepth/core.hpp"
#include "semdepth/runlog.hpp"

namespace semdepth {

enum class HeatMapNorm { Global, PerRow };

[[nodiscard]] HeatMapNorm parse_heatmap_norm(const std::string& s);
[[nodiscard]] std::string to_string(HeatMapNorm n);

/// Rows × bins percentages of valid depth values per image row.
struct DepthHeatMap {
    int rows = 0;
    int cols = 0;
    double range_m = 100.0;
    double bin_m = 0.2;
    HeatMapNorm norm = HeatMapNorm::Global;
    std::vector<double> values;      ///< row-major percentages
    std::vector<bool> empty_rows;    ///< rows without any valid pixel

    [[nodiscard]] double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    [[nodiscard]] double row_sum(int r) const;
    [[nodiscard]] double total() const;
};

/// Raw counts behind a DepthHeatMap; frames can be added in any order and partial
/// histograms merged.
class DepthHistogram {
public:
    DepthHistogram(int rows, double range_m = 100.0, double bin_m = 0.2);

    void add(const DepthMap& depth);
    void merge(const DepthHistogram& other);
    [[nodiscard]] int bin_of(double depth_m) const;
    [[nodiscard]] std::size_t total_count() const { return total_; }
    [[nodiscard]] std::size_t count(int r, int c) const { return counts_[static_cast<std::size_t>(r) * cols_ + c]; }
    /// Throws when no valid pixel was added.
    [[nodiscard]] DepthHeatMap normalized(HeatMapNorm norm) const;

private:
    int rows_;
    int cols_;
    double range_m_;
    double bin_m_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

[[nodiscard]] DepthHeatMap depth_heatmap(const std::vector<DepthMap>& depths, HeatMapNorm norm,
                                         double range_m = 100.0, double bin_m = 0.2);
/// Every frame of the manifest; frames must share one height.
[[nodiscard]] DepthHeatMap depth_heatmap(const DatasetManifest& manifest, HeatMapNorm norm, double range_m = 100.0,
                                         double bin_m = 0.2);

/// Euclidean distance over all cells.
[[nodiscard]] double heatmap_distance(const DepthHeatMap& a, const DepthHeatMap& b);

struct ErrorBins {
    double min = -5.0;
    double max = 5.0;
    double width = 0.1;

    [[nodiscard]] int count() const;
    /// Bin of y − y*, clamped to the outermost bins.
    [[nodiscard]] int index_of(double error) const;
};

/// Per ground-truth distance range, the percentage histogram of prediction error.
struct AccuracyHeatMap {
    std::vector<double> range_edges;  ///< n+1 edges of n ranges [e_k, e_k+1)
    ErrorBins bins;
    std::vector<double> values;       ///< ranges × bins, each non-empty row sums to 100
    std::vector<bool> empty_ranges;
    double power_norm = 0.5;          ///< display only

    [[nodiscard]] int ranges() const { return static_cast<int>(range_edges.size()) - 1; }
    [[nodiscard]] double at(int range, int bin) const {
        return values[static_cast<std::size_t>(range) * bins.count() + bin];
    }
    /// values^power_norm scaled to [0,1]; the stored values are untouched.
    [[nodiscard]] std::vector<double> display_values() const;
};

class AccuracyHistogram {
public:
    AccuracyHistogram(std::vector<double> range_edges, ErrorBins bins);
    void add(const DepthMap& pred, const DepthMap& gt);
    void merge(const AccuracyHistogram& other);
    [[nodiscard]] AccuracyHeatMap normalized() const;

private:
    std::vector<double> edges_;
    ErrorBins bins_;
    std::vector<std::size_t> counts_;
};

/// Edges 0, 5, …, 100 m.
[[nodiscard]] std::vector<double> default_range_edges();

[[nodiscard]] AccuracyHeatMap accuracy_heatmap(const DepthMap& pred, const DepthMap& gt,
                                               std::vector<double> range_edges = default_range_edges(),
                                               ErrorBins bins = {});

/// 100·(a − b)/a for metrics where lower is better, 100·(b − a)/a for the δ thresholds:
/// the improvement of b over baseline a. Positive means b is better.
[[nodiscard]] double relative_superiority(const std::string& metric, double baseline, double candidate);

struct NamedRun {
    std::string name;
    RunLog log;
};

struct ReportOptions {
    std::string split = "test";
    int from_eval = 1;
    int to_eval = 1 << 30;
    std::vector<std::string> baselines;  ///< runs every other run is compared against
};

/// Writes windowed_averages.csv, relative_superiority.csv, curves/<metric>.{csv,png} and
/// heatmaps/<name>.{png,csv}. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const std::vector<NamedRun>& runs,
                                               const std::vector<std::pair<std::string, DepthHeatMap>>& heatmaps,
                                               const std::filesystem::path& out_dir, const ReportOptions& options = {});

/// Heat map as a color PNG (power-normed for display) plus a CSV of raw values.
std::vector<std::filesystem::path> write_heatmap(const DepthHeatMap& map, const std::filesystem::path& stem);
std::vector<std::filesystem::path> write_heatmap(const AccuracyHeatMap& map, const std::filesystem::path& stem);

}  // namespace semdepth
