#include "semdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semdepth/keyvalue.hpp"

namespace semdepth {

const std::vector<std::string>& MetricReport::names() {
    static const std::vector<std::string> n = {"mape",   "mspe",   "rmse",   "rmse_log", "log10",
                                               "delta1", "delta2", "delta3", "silog"};
    return n;
}

std::string MetricReport::csv_header() {
    std::string h;
    for (const auto& n : names()) h += n + ",";
    return h + "n_valid_pixels,n_clamped";
}

std::vector<double> MetricReport::values() const {
    return {mape, mspe, rmse, rmse_log, log10, delta1, delta2, delta3, silog};
}

std::string MetricReport::csv_row() const {
    std::string row;
    for (double v : values()) row += format_double(v) + ",";
    return row + std::to_string(n_valid_pixels) + "," + std::to_string(n_clamped);
}

double MetricReport::get(const std::string& name) const {
    const auto& n = names();
    const auto it = std::find(n.begin(), n.end(), name);
    if (it == n.end()) throw std::out_of_range("unknown metric '" + name + "'");
    return values()[static_cast<std::size_t>(it - n.begin())];
}

void DepthMetricAccumulator::add_pixel(double y, double y_star) {
    if (!(y_star > 0)) throw std::invalid_argument("depth metrics: ground truth must be positive inside the mask");
    const double e = y - y_star;
    abs_rel_ += std::abs(e) / y_star;
    sq_rel_ += e * e / y_star;
    sq_ += e * e;
    if (!(y > 0)) {
        y = kMinPredictedDepth;
        ++clamped_;
    }
    const double d = std::log(y) - std::log(y_star);
    sq_log_ += d * d;
    abs_log10_ += std::abs(std::log10(y) - std::log10(y_star));
    const double ratio = std::max(y / y_star, y_star / y);
    double threshold = 1.25;
    for (auto& count : delta_) {
        if (ratio < threshold) ++count;
        threshold *= 1.25;
    }
    d_ += d;
    d2_ += d * d;
    ++n_;
}

void DepthMetricAccumulator::add(const DepthMap& pred, const DepthMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw std::invalid_argument("depth metrics: prediction and ground truth extents differ");
    }
    const auto y = pred.values();
    const auto y_star = gt.values();
    const auto pv = pred.valid_mask();
    const auto gv = gt.valid_mask();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (gv[i] && pv[i]) add_pixel(y[i], y_star[i]);
    }
}

void DepthMetricAccumulator::merge(const DepthMetricAccumulator& o) {
    n_ += o.n_;
    clamped_ += o.clamped_;
    abs_rel_ += o.abs_rel_;
    sq_rel_ += o.sq_rel_;
    sq_ += o.sq_;
    sq_log_ += o.sq_log_;
    abs_log10_ += o.abs_log10_;
    for (std::size_t i = 0; i < delta_.size(); ++i) delta_[i] += o.delta_[i];
    d_ += o.d_;
    d2_ += o.d2_;
}

MetricReport DepthMetricAccumulator::report() const {
    if (n_ == 0) throw std::domain_error("depth metrics: no valid pixels");
    const double n = static_cast<double>(n_);
    MetricReport r;
    r.mape = 100.0 * abs_rel_ / n;
    r.mspe = 100.0 * sq_rel_ / n;
    r.rmse = std::sqrt(sq_ / n);
    r.rmse_log = std::sqrt(sq_log_ / n);
    r.log10 = abs_log10_ / n;
    r.delta1 = static_cast<double>(delta_[0]) / n;
    r.delta2 = static_cast<double>(delta_[1]) / n;
    r.delta3 = static_cast<double>(delta_[2]) / n;
    r.silog = std::max(0.0, d2_ / n - (d_ / n) * (d_ / n));
    r.n_valid_pixels = n_;
    r.n_clamped = clamped_;
    return r;
}

MetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt) {
    DepthMetricAccumulator acc;
    acc.add(pred, gt);
    return acc.report();
}

double IouResult::mean_present() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (absent[c]) continue;
        sum += per_class[c];
        ++n;
    }
    return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

double IouResult::mean_all() const {
    if (per_class.empty()) return 1.0;
    double sum = 0.0;
    for (double v : per_class) sum += v;
    return sum / static_cast<double>(per_class.size());
}

void IouAccumulator::add(const SemanticLabelMap& pred, const SemanticLabelMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width() || pred.channels() != gt.channels()) {
        throw std::invalid_argument("iou: prediction and ground truth shapes differ");
    }
    if (static_cast<std::size_t>(gt.channels()) != inter_.size()) {
        throw std::invalid_argument("iou: channel count differs from accumulator");
    }
    for (int r = 0; r < gt.height(); ++r) {
        for (int c = 0; c < gt.width(); ++c) {
            const int p = pred.argmax(r, c);
            const int g = gt.argmax(r, c);
            if (p == g) {
                ++inter_[p];
                ++uni_[p];
            } else {
                ++uni_[p];
                ++uni_[g];
            }
        }
    }
}

void IouAccumulator::add_labels(std::span<const int> pred, std::span<const int> gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("iou: label counts differ");
    const int n = static_cast<int>(inter_.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i];
        const int g = gt[i];
        if (p < 0 || p >= n || g < 0 || g >= n) throw std::out_of_range("iou: label out of range");
        ++uni_[p];
        if (p == g) {
            ++inter_[p];
        } else {
            ++uni_[g];
        }
    }
}

IouResult IouAccumulator::result() const {
    IouResult out;
    for (std::size_t c = 0; c < inter_.size(); ++c) {
        const bool absent = uni_[c] == 0;
        out.absent.push_back(absent);
        out.per_class.push_back(absent ? 1.0 : static_cast<double>(inter_[c]) / static_cast<double>(uni_[c]));
    }
    return out;
}

IouResult iou_per_class(const SemanticLabelMap& pred, const SemanticLabelMap& gt) {
    IouAccumulator acc(gt.channels());
    acc.add(pred, gt);
    return acc.result();
}

bool nearly_equal(double a, double b, double rel, double abs) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

}  // namespace semdepth
