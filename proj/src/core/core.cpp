#include "semdepth/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace semdepth {

ClassRegistry::ClassRegistry(std::string name, std::vector<ClassEntry> entries)
    : name_(std::move(name)), entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("class registry '" + name_ + "' is empty");
    if (entries_.front().name != "Unlabeled" || entries_.front().rgb != Rgb{}) {
        throw std::invalid_argument("class registry '" + name_ + "': entry 0 must be Unlabeled [0,0,0]");
    }
    std::unordered_set<std::string> names;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!names.insert(e.name).second) {
            throw std::invalid_argument("class registry '" + name_ + "': duplicate class name '" + e.name + "'");
        }
        if (!by_rgb_.emplace(e.rgb.packed(), i).second) {
            throw std::invalid_argument("class registry '" + name_ + "': duplicate rgb code for '" + e.name + "'");
        }
    }
}

std::optional<std::size_t> ClassRegistry::index_of(std::string_view class_name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == class_name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ClassRegistry::index_of(Rgb rgb) const {
    if (auto it = by_rgb_.find(rgb.packed()); it != by_rgb_.end()) return it->second;
    return std::nullopt;
}

bool operator==(const ClassRegistry& a, const ClassRegistry& b) {
    if (a.name_ != b.name_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        if (a.entries_[i].name != b.entries_[i].name || a.entries_[i].rgb != b.entries_[i].rgb) return false;
    }
    return true;
}

RgbImage::RgbImage(int height, int width, Rgb fill) : Grid(height, width, 3) {
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) set_pixel(r, c, fill);
    }
}

void RgbImage::set_pixel(int row, int col, Rgb rgb) {
    at(row, col, 0) = rgb.r;
    at(row, col, 1) = rgb.g;
    at(row, col, 2) = rgb.b;
}

int SemanticLabelMap::argmax(int row, int col) const {
    int best = 0;
    for (int ch = 1; ch < channels(); ++ch) {
        if (at(row, col, ch) > at(row, col, best)) best = ch;
    }
    return best;
}

SemanticLabelMap SemanticLabelMap::one_hot(int height, int width, int channels, std::span<const int> labels) {
    if (labels.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("one_hot: label count does not match height*width");
    }
    SemanticLabelMap m(height, width, channels);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const int label = labels[static_cast<std::size_t>(r) * width + c];
            if (label < 0 || label >= channels) throw std::out_of_range("one_hot: label out of range");
            m.at(r, c, label) = 1.0F;
        }
    }
    return m;
}

DepthMap::DepthMap(int height, int width)
    : height_(height), width_(width),
      values_(static_cast<std::size_t>(height) * width, 0.0F),
      valid_(static_cast<std::size_t>(height) * width, 0) {}

DepthMap::DepthMap(int height, int width, std::vector<float> values, std::vector<std::uint8_t> valid)
    : height_(height), width_(width), values_(std::move(values)), valid_(std::move(valid)) {
    const auto n = static_cast<std::size_t>(height) * width;
    if (values_.size() != n || valid_.size() != n) {
        throw std::invalid_argument("depth map buffers do not match its dimensions");
    }
}

DepthMap DepthMap::dense(int height, int width, std::vector<float> values) {
    std::vector<std::uint8_t> valid(values.size(), 1);
    return {height, width, std::move(values), std::move(valid)};
}

void DepthMap::set(int row, int col, float value, bool valid) {
    values_[index(row, col)] = value;
    valid_[index(row, col)] = valid ? 1 : 0;
}

std::size_t DepthMap::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid_) n += v != 0;
    return n;
}

double afov_of(double dim_px, double focal_length_px) {
    if (!(dim_px > 0.0) || !(focal_length_px > 0.0)) {
        throw std::domain_error("afov_of: dimension and focal length must be positive");
    }
    return 2.0 * std::atan(dim_px / (2.0 * focal_length_px)) * 180.0 / std::numbers::pi;
}

double extent_for_afov(double afov_deg, double focal_length_px) {
    if (!(afov_deg > 0.0 && afov_deg < 180.0) || !(focal_length_px > 0.0)) {
        throw std::domain_error("extent_for_afov: need 0 < afov < 180 and positive focal length");
    }
    return 2.0 * focal_length_px * std::tan(afov_deg * std::numbers::pi / 360.0);
}

namespace {

std::string at_pixel(int r, int c) {
    std::ostringstream os;
    os << " at (" << r << "," << c << ")";
    return os.str();
}

std::string extent(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

std::vector<std::string> validate_sample(const Sample& s, double depth_cap) {
    std::vector<std::string> out;
    const int h = s.image.height();
    const int w = s.image.width();

    if (s.image.channels() != 3) out.push_back("image: expected 3 channels");
    for (float v : s.image.data()) {
        if (!(v >= 0.0F && v <= 1.0F)) {
            out.push_back("image: value outside [0,1]");
            break;
        }
    }

    const auto& k = s.intrinsics;
    if (!(k.focal_length_px > 0.0) || k.width_px <= 0 || k.height_px <= 0) {
        out.push_back("intrinsics: focal length and dimensions must be positive");
    }

    if (s.semantic) {
        const auto& m = *s.semantic;
        if (!m.same_extent(h, w)) {
            out.push_back("semantic: extent " + extent(m.height(), m.width()) + " differs from image " + extent(h, w));
        } else if (m.channels() < 1) {
            out.push_back("semantic: no channels");
        } else {
            bool reported = false;
            for (int r = 0; r < h && !reported; ++r) {
                for (int c = 0; c < w && !reported; ++c) {
                    float sum = 0.0F;
                    bool binary = true;
                    for (int ch = 0; ch < m.channels(); ++ch) {
                        const float v = m.at(r, c, ch);
                        binary = binary && (v == 0.0F || v == 1.0F);
                        sum += v;
                    }
                    if (!binary || sum != 1.0F) {
                        out.push_back("semantic: not one-hot" + at_pixel(r, c));
                        reported = true;
                    }
                }
            }
        }
    }

    if (s.depth) {
        const auto& d = *s.depth;
        if (d.height() != h || d.width() != w) {
            out.push_back("depth: extent " + extent(d.height(), d.width()) + " differs from image " + extent(h, w));
        } else {
            bool over_cap = false;
            bool non_positive = false;
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    if (!d.valid(r, c)) continue;
                    const float v = d.value(r, c);
                    if (!(v > 0.0F)) non_positive = true;
                    if (v > depth_cap) over_cap = true;
                }
            }
            if (non_positive) out.push_back("depth: non-positive valid value");
            if (over_cap) out.push_back("depth: exceeds cap");
        }
    }
    return out;
}

}  // namespace semdepth
