#include "semdepth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "semdepth/keyvalue.hpp"
#include "semdepth/metrics.hpp"

namespace semdepth {

namespace fs = std::filesystem;

HeatMapNorm parse_heatmap_norm(const std::string& s) {
    if (s == "global") return HeatMapNorm::Global;
    if (s == "per_row" || s == "row") return HeatMapNorm::PerRow;
    throw std::invalid_argument("unknown heat-map normalization '" + s + "' (global or per_row)");
}

std::string to_string(HeatMapNorm n) { return n == HeatMapNorm::Global ? "global" : "per_row"; }

double DepthHeatMap::row_sum(int r) const {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += at(r, c);
    return s;
}

double DepthHeatMap::total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

DepthHistogram::DepthHistogram(int rows, double range_m, double bin_m)
    : rows_(rows), cols_(static_cast<int>(std::lround(range_m / bin_m))), range_m_(range_m), bin_m_(bin_m) {
    if (rows < 1 || !(range_m > 0) || !(bin_m > 0) || cols_ < 1) {
        throw std::invalid_argument("depth histogram: rows, range and bin must be positive");
    }
    counts_.assign(static_cast<std::size_t>(rows_) * cols_, 0);
}

int DepthHistogram::bin_of(double depth_m) const {
    const auto b = static_cast<int>(std::floor(depth_m / bin_m_ + 1e-9));
    return std::clamp(b, 0, cols_ - 1);
}

void DepthHistogram::add(const DepthMap& depth) {
    if (depth.height() != rows_) {
        throw std::invalid_argument("depth histogram: frame height " + std::to_string(depth.height()) + " differs from " +
                                    std::to_string(rows_));
    }
    for (int r = 0; r < depth.height(); ++r) {
        for (int c = 0; c < depth.width(); ++c) {
            if (!depth.valid(r, c)) continue;
            ++counts_[static_cast<std::size_t>(r) * cols_ + bin_of(depth.value(r, c))];
            ++total_;
        }
    }
}

void DepthHistogram::merge(const DepthHistogram& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("depth histogram: shapes differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    total_ += o.total_;
}

DepthHeatMap DepthHistogram::normalized(HeatMapNorm norm) const {
    if (total_ == 0) throw std::domain_error("depth heat map: no valid depth pixels");
    DepthHeatMap m;
    m.rows = rows_;
    m.cols = cols_;
    m.range_m = range_m_;
    m.bin_m = bin_m_;
    m.norm = norm;
    m.values.assign(counts_.size(), 0.0);
    m.empty_rows.assign(rows_, false);
    for (int r = 0; r < rows_; ++r) {
        std::size_t row_total = 0;
        for (int c = 0; c < cols_; ++c) row_total += count(r, c);
        m.empty_rows[r] = row_total == 0;
        const double denom = norm == HeatMapNorm::Global ? static_cast<double>(total_) : static_cast<double>(row_total);
        if (row_total == 0) continue;
        for (int c = 0; c < cols_; ++c) {
            m.values[static_cast<std::size_t>(r) * cols_ + c] = 100.0 * static_cast<double>(count(r, c)) / denom;
        }
    }
    return m;
}

DepthHeatMap depth_heatmap(const std::vector<DepthMap>& depths, HeatMapNorm norm, double range_m, double bin_m) {
    if (depths.empty()) throw std::invalid_argument("depth heat map: no frames");
    DepthHistogram h(depths.front().height(), range_m, bin_m);
    for (const auto& d : depths) h.add(d);
    return h.normalized(norm);
}

DepthHeatMap depth_heatmap(const DatasetManifest& manifest, HeatMapNorm norm, double range_m, double bin_m) {
    if (!manifest.has_depth()) throw std::invalid_argument("manifest lacks depth");
    std::optional<DepthHistogram> h;
    for (const auto& f : manifest.frames) {
        const auto s = load_sample(manifest, f);
        if (!h) h.emplace(s.depth->height(), range_m, bin_m);
        h->add(*s.depth);
    }
    return h->normalized(norm);
}

double heatmap_distance(const DepthHeatMap& a, const DepthHeatMap& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("heat-map distance: shapes differ");
    if (a.norm != b.norm) throw std::invalid_argument("heat-map distance: normalizations differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return std::sqrt(s);
}

int ErrorBins::count() const { return static_cast<int>(std::lround((max - min) / width)); }

int ErrorBins::index_of(double error) const {
    const auto b = static_cast<int>(std::floor((error - min) / width + 1e-9));
    return std::clamp(b, 0, count() - 1);
}

std::vector<double> AccuracyHeatMap::display_values() const {
    std::vector<double> out(values.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::pow(values[i], power_norm);
        peak = std::max(peak, out[i]);
    }
    if (peak > 0) {
        for (auto& v : out) v /= peak;
    }
    return out;
}

AccuracyHistogram::AccuracyHistogram(std::vector<double> range_edges, ErrorBins bins)
    : edges_(std::move(range_edges)), bins_(bins) {
    if (edges_.size() < 2 || !std::is_sorted(edges_.begin(), edges_.end()) ||
        std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
        throw std::invalid_argument("accuracy heat map: need at least two strictly increasing range edges");
    }
    if (!(bins_.width > 0) || bins_.count() < 1) throw std::invalid_argument("accuracy heat map: bad error bins");
    counts_.assign((edges_.size() - 1) * bins_.count(), 0);
}

void AccuracyHistogram::add(const DepthMap& pred, const DepthMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw std::invalid_argument("accuracy heat map: prediction and ground truth extents differ");
    }
    const auto y = pred.values();
    const auto t = gt.values();
    const auto valid = gt.valid_mask();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!valid[i]) continue;
        const auto it = std::upper_bound(edges_.begin(), edges_.end(), static_cast<double>(t[i]));
        if (it == edges_.begin() || it == edges_.end()) continue;
        const auto range = static_cast<std::size_t>(it - edges_.begin()) - 1;
        ++counts_[range * bins_.count() + bins_.index_of(static_cast<double>(y[i]) - t[i])];
    }
}

void AccuracyHistogram::merge(const AccuracyHistogram& o) {
    if (o.counts_.size() != counts_.size()) throw std::invalid_argument("accuracy heat map: shapes differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
}

AccuracyHeatMap AccuracyHistogram::normalized() const {
    AccuracyHeatMap m;
    m.range_edges = edges_;
    m.bins = bins_;
    m.values.assign(counts_.size(), 0.0);
    const int nb = bins_.count();
    for (int r = 0; r + 1 < static_cast<int>(edges_.size()); ++r) {
        std::size_t row_total = 0;
        for (int b = 0; b < nb; ++b) row_total += counts_[static_cast<std::size_t>(r) * nb + b];
        m.empty_ranges.push_back(row_total == 0);
        if (row_total == 0) continue;
        for (int b = 0; b < nb; ++b) {
            const auto i = static_cast<std::size_t>(r) * nb + b;
            m.values[i] = 100.0 * static_cast<double>(counts_[i]) / static_cast<double>(row_total);
        }
    }
    return m;
}

std::vector<double> default_range_edges() {
    std::vector<double> e;
    for (int k = 0; k <= 20; ++k) e.push_back(5.0 * k);
    return e;
}

AccuracyHeatMap accuracy_heatmap(const DepthMap& pred, const DepthMap& gt, std::vector<double> range_edges,
                                 ErrorBins bins) {
    AccuracyHistogram h(std::move(range_edges), bins);
    h.add(pred, gt);
    return h.normalized();
}

double relative_superiority(const std::string& metric, double baseline, double candidate) {
    if (baseline == 0.0) throw std::domain_error("relative superiority: baseline value is zero");
    const bool higher_better = metric.rfind("delta", 0) == 0;
    return higher_better ? 100.0 * (candidate - baseline) / baseline : 100.0 * (baseline - candidate) / baseline;
}

namespace {

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    written.push_back(path);
}

void write_png(const fs::path& path, const cv::Mat& img, std::vector<fs::path>& written) {
    if (!cv::imwrite(path.string(), img)) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
}

cv::Mat colorize(const std::vector<double>& unit_values, int rows, int cols) {
    cv::Mat gray(rows, cols, CV_8UC1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            gray.at<std::uint8_t>(r, c) =
                static_cast<std::uint8_t>(std::lround(255.0 * unit_values[static_cast<std::size_t>(r) * cols + c]));
        }
    }
    cv::Mat color;
    cv::applyColorMap(gray, color, cv::COLORMAP_VIRIDIS);
    return color;
}

std::string grid_csv(const std::vector<double>& values, int rows, int cols) {
    std::string out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out += (c ? "," : "") + format_double(values[static_cast<std::size_t>(r) * cols + c]);
        }
        out += "\n";
    }
    return out;
}

const std::vector<cv::Scalar>& palette() {
    static const std::vector<cv::Scalar> p = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44},  {40, 39, 214},
                                              {189, 103, 148}, {75, 86, 140}, {194, 119, 227}, {127, 127, 127}};
    return p;
}

// Line chart of metric vs step, one polyline per run.
cv::Mat plot_curves(const std::string& title, const std::vector<std::pair<std::string, std::vector<RunRecord>>>& series) {
    constexpr int kW = 720;
    constexpr int kH = 440;
    constexpr int kLeft = 70;
    constexpr int kRight = 20;
    constexpr int kTop = 40;
    constexpr int kBottom = 50;
    cv::Mat img(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& [name, s] : series) {
        for (const auto& r : s) {
            x0 = std::min(x0, static_cast<double>(r.step));
            x1 = std::max(x1, static_cast<double>(r.step));
            y0 = std::min(y0, r.value);
            y1 = std::max(y1, r.value);
        }
    }
    if (x0 > x1) return img;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x, double y) {
        return cv::Point(kLeft + static_cast<int>((x - x0) / (x1 - x0) * (kW - kLeft - kRight)),
                         kH - kBottom - static_cast<int>((y - y0) / (y1 - y0) * (kH - kTop - kBottom)));
    };
    const cv::Scalar black(0, 0, 0);
    cv::rectangle(img, {kLeft, kTop}, {kW - kRight, kH - kBottom}, black);
    cv::putText(img, title, {kLeft, 25}, cv::FONT_HERSHEY_SIMPLEX, 0.6, black, 1, cv::LINE_AA);
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0;
        const double xv = x0 + (x1 - x0) * k / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", yv);
        cv::putText(img, buf, {5, px(x0, yv).y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
        std::snprintf(buf, sizeof buf, "%.0f", xv);
        cv::putText(img, buf, {px(xv, y0).x - 10, kH - kBottom + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1,
                    cv::LINE_AA);
    }
    cv::putText(img, "step", {kW / 2 - 15, kH - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45, black, 1, cv::LINE_AA);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& color = palette()[i % palette().size()];
        const auto& s = series[i].second;
        for (std::size_t k = 1; k < s.size(); ++k) {
            cv::line(img, px(s[k - 1].step, s[k - 1].value), px(s[k].step, s[k].value), color, 2, cv::LINE_AA);
        }
        if (s.size() == 1) cv::circle(img, px(s[0].step, s[0].value), 3, color, -1);
        cv::putText(img, series[i].first, {kW - kRight - 120, kTop + 18 + 18 * static_cast<int>(i)},
                    cv::FONT_HERSHEY_SIMPLEX, 0.45, color, 1, cv::LINE_AA);
    }
    return img;
}

std::optional<double> params_of(const RunLog& log) {
    const auto s = log.series("model", "trainable_params");
    if (s.empty()) return std::nullopt;
    return s.back().value;
}

}  // namespace

std::vector<fs::path> write_heatmap(const DepthHeatMap& map, const fs::path& stem) {
    std::vector<fs::path> written;
    std::vector<double> display(map.values.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < display.size(); ++i) {
        display[i] = std::sqrt(map.values[i]);
        peak = std::max(peak, display[i]);
    }
    if (peak > 0) {
        for (auto& v : display) v /= peak;
    }
    write_png(fs::path(stem.string() + ".png"), colorize(display, map.rows, map.cols), written);
    write_text(fs::path(stem.string() + ".csv"), grid_csv(map.values, map.rows, map.cols), written);
    return written;
}

std::vector<fs::path> write_heatmap(const AccuracyHeatMap& map, const fs::path& stem) {
    std::vector<fs::path> written;
    const int rows = map.ranges();
    const int cols = map.bins.count();
    cv::Mat small = colorize(map.display_values(), rows, cols);
    cv::Mat big;
    cv::resize(small, big, cv::Size(cols * 4, rows * 16), 0, 0, cv::INTER_NEAREST);
    write_png(fs::path(stem.string() + ".png"), big, written);
    std::string csv = "range_min,range_max";
    for (int b = 0; b < cols; ++b) csv += "," + format_double(map.bins.min + b * map.bins.width);
    csv += "\n";
    for (int r = 0; r < rows; ++r) {
        csv += format_double(map.range_edges[r]) + "," + format_double(map.range_edges[r + 1]);
        for (int b = 0; b < cols; ++b) csv += "," + format_double(map.at(r, b));
        csv += "\n";
    }
    write_text(fs::path(stem.string() + ".csv"), csv, written);
    return written;
}

std::vector<fs::path> emit_report(const std::vector<NamedRun>& runs,
                                  const std::vector<std::pair<std::string, DepthHeatMap>>& heatmaps,
                                  const fs::path& out_dir, const ReportOptions& options) {
    if (runs.empty() && heatmaps.empty()) throw std::invalid_argument("report: nothing to write");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<fs::path> written;

    if (!runs.empty()) {
        const auto& metrics = MetricReport::names();
        std::map<std::string, std::map<std::string, double>> table;
        std::string csv = "model";
        for (const auto& m : metrics) csv += "," + m;
        csv += ",trainable_params\n";
        for (const auto& run : runs) {
            csv += run.name;
            for (const auto& m : metrics) {
                csv += ",";
                if (run.log.series(options.split, m).empty()) continue;
                const double v = windowed_average(run.log, options.split, m, options.from_eval, options.to_eval);
                table[run.name][m] = v;
                csv += format_double(v);
            }
            csv += ",";
            if (auto p = params_of(run.log)) {
                table[run.name]["trainable_params"] = *p;
                csv += format_double(*p);
            }
            csv += "\n";
        }
        write_text(out_dir / "windowed_averages.csv", csv, written);

        std::string sup = "comparison";
        for (const auto& m : metrics) sup += "," + m;
        sup += ",trainable_params\n";
        for (const auto& base : options.baselines) {
            if (!table.contains(base)) throw std::invalid_argument("report: unknown baseline run '" + base + "'");
            for (const auto& run : runs) {
                if (run.name == base) continue;
                sup += run.name + " relative to " + base;
                std::vector<std::string> cols(metrics.begin(), metrics.end());
                cols.push_back("trainable_params");
                for (const auto& m : cols) {
                    sup += ",";
                    const auto& a = table[base];
                    const auto& b = table[run.name];
                    if (a.contains(m) && b.contains(m) && a.at(m) != 0.0) {
                        sup += format_double(relative_superiority(m, a.at(m), b.at(m)));
                    }
                }
                sup += "\n";
            }
        }
        write_text(out_dir / "relative_superiority.csv", sup, written);

        fs::create_directories(out_dir / "curves");
        std::vector<std::pair<std::string, std::string>> curves;  // split, metric
        for (const auto& run : runs) {
            for (const auto& split : run.log.splits()) {
                if (split == "model") continue;
                for (const auto& m : run.log.metrics(split)) {
                    if (std::find(curves.begin(), curves.end(), std::pair{split, m}) == curves.end()) {
                        curves.emplace_back(split, m);
                    }
                }
            }
        }
        for (const auto& [split, metric] : curves) {
            const auto key = split + "_" + metric;
            std::vector<std::pair<std::string, std::vector<RunRecord>>> series;
            std::string csv_curve = "run,step,value\n";
            for (const auto& run : runs) {
                auto s = run.log.series(split, metric);
                for (const auto& r : s) csv_curve += run.name + "," + std::to_string(r.step) + "," + format_double(r.value) + "\n";
                if (!s.empty()) series.emplace_back(run.name, std::move(s));
            }
            std::string file = key;
            std::replace(file.begin(), file.end(), ':', '-');
            write_text(out_dir / "curves" / (file + ".csv"), csv_curve, written);
            write_png(out_dir / "curves" / (file + ".png"), plot_curves(split + " " + metric, series), written);
        }
    }

    if (!heatmaps.empty()) {
        fs::create_directories(out_dir / "heatmaps");
        for (const auto& [name, map] : heatmaps) {
            auto w = write_heatmap(map, out_dir / "heatmaps" / name);
            written.insert(written.end(), w.begin(), w.end());
        }
    }
    return written;
}

}  // namespace semdepth
