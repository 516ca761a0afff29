#include "semdepth/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <set>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

namespace semdepth {

namespace {

constexpr double kSnapPx = 0.01;

double snapped(double extent) {
    const double nearest = std::round(extent);
    return std::abs(extent - nearest) < kSnapPx ? nearest : extent;
}

int ceil_even(double extent) {
    auto v = static_cast<int>(std::ceil(snapped(extent)));
    return v % 2 == 0 ? v : v + 1;
}

int ceil_int(double extent) { return static_cast<int>(std::ceil(snapped(extent))); }

void check_extent(const char* field, int h, int w, const CameraIntrinsics& src) {
    if (h != src.height_px || w != src.width_px) {
        throw std::invalid_argument(std::string(field) + ": extent " + std::to_string(w) + "x" + std::to_string(h) +
                                    " differs from plan source " + std::to_string(src.width_px) + "x" +
                                    std::to_string(src.height_px));
    }
}

// Source pixel index (row * crop_width + col, inside the crop) that nearest-neighbour
// resampling assigns to each target pixel.
std::vector<int> nearest_lookup(const CropPlan& plan) {
    cv::Mat index(plan.crop_height, plan.crop_width, CV_32SC1);
    for (int r = 0; r < plan.crop_height; ++r) {
        auto* row = index.ptr<int>(r);
        for (int c = 0; c < plan.crop_width; ++c) row[c] = r * plan.crop_width + c;
    }
    cv::Mat out;
    cv::resize(index, out, cv::Size(plan.target.width, plan.target.height), 0, 0, cv::INTER_NEAREST_EXACT);
    return {out.begin<int>(), out.end<int>()};
}

}  // namespace

AfovTarget reference_afov(const std::string& reference) {
    if (reference == "lyft") return {afov_of(1216, 880.0), afov_of(352, 880.0)};
    throw std::invalid_argument("unknown AFOV reference '" + reference + "'");
}

CropPlan plan_afov_crop(const CameraIntrinsics& src, double target_h_afov, double target_v_afov, TargetSize target) {
    if (src.focal_length_px <= 0 || src.width_px <= 0 || src.height_px <= 0) {
        throw std::invalid_argument("plan_afov_crop: intrinsics must be positive");
    }
    if (!(target_h_afov > 0 && target_h_afov < 180 && target_v_afov > 0 && target_v_afov < 180)) {
        throw std::invalid_argument("plan_afov_crop: target AFOV must lie in (0, 180)");
    }
    CropPlan plan;
    plan.source = src;
    plan.target = target;
    plan.crop_width = std::min(src.width_px, ceil_even(extent_for_afov(target_h_afov, src.focal_length_px)));
    plan.crop_height = std::min(src.height_px, ceil_int(extent_for_afov(target_v_afov, src.focal_length_px)));
    plan.origin_row = (src.height_px - plan.crop_height) / 2;
    plan.origin_col = (src.width_px - plan.crop_width) / 2;
    plan.achieved_h_afov = afov_of(plan.crop_width, src.focal_length_px);
    plan.achieved_v_afov = afov_of(plan.crop_height, src.focal_length_px);
    return plan;
}

Sample apply_crop_resize(const Sample& s, const CropPlan& plan) {
    check_extent("image", s.image.height(), s.image.width(), plan.source);
    if (s.semantic) check_extent("semantic", s.semantic->height(), s.semantic->width(), plan.source);
    if (s.depth) check_extent("depth", s.depth->height(), s.depth->width(), plan.source);

    const int th = plan.target.height;
    const int tw = plan.target.width;
    Sample out;
    out.dataset_id = s.dataset_id;
    out.frame_id = s.frame_id;
    out.intrinsics = {plan.source.focal_length_px * tw / plan.crop_width, tw, th};

    const cv::Rect roi(plan.origin_col, plan.origin_row, plan.crop_width, plan.crop_height);
    cv::Mat img(s.image.height(), s.image.width(), CV_32FC3, const_cast<float*>(s.image.data().data()));
    cv::Mat resized;
    cv::resize(img(roi), resized, cv::Size(tw, th), 0, 0, cv::INTER_LINEAR);
    out.image = ImageTensor(th, tw, std::vector<float>(resized.ptr<float>(), resized.ptr<float>() + resized.total() * 3));
    for (auto& v : out.image.data()) v = std::clamp(v, 0.0F, 1.0F);

    if (!s.semantic && !s.depth) return out;
    const auto lookup = nearest_lookup(plan);
    auto source_pixel = [&](std::size_t i) {
        const int local = lookup[i];
        return std::pair{plan.origin_row + local / plan.crop_width, plan.origin_col + local % plan.crop_width};
    };

    if (s.semantic) {
        const int n = s.semantic->channels();
        SemanticLabelMap m(th, tw, n);
        for (std::size_t i = 0; i < lookup.size(); ++i) {
            const auto [sr, sc] = source_pixel(i);
            const int r = static_cast<int>(i) / tw;
            const int c = static_cast<int>(i) % tw;
            for (int ch = 0; ch < n; ++ch) m.at(r, c, ch) = s.semantic->at(sr, sc, ch);
        }
        out.semantic = std::move(m);
    }
    if (s.depth) {
        DepthMap d(th, tw);
        for (std::size_t i = 0; i < lookup.size(); ++i) {
            const auto [sr, sc] = source_pixel(i);
            d.set(static_cast<int>(i) / tw, static_cast<int>(i) % tw, s.depth->value(sr, sc), s.depth->valid(sr, sc));
        }
        out.depth = std::move(d);
    }
    return out;
}

OneHotResult rgb_to_onehot(const RgbImage& label_image, const ClassRegistry& registry) {
    OneHotResult out{SemanticLabelMap(label_image.height(), label_image.width(), static_cast<int>(registry.size())), 0};
    for (int r = 0; r < label_image.height(); ++r) {
        for (int c = 0; c < label_image.width(); ++c) {
            const auto idx = registry.index_of(label_image.pixel(r, c));
            if (!idx) ++out.unmatched_pixels;
            out.map.at(r, c, static_cast<int>(idx.value_or(0))) = 1.0F;
        }
    }
    return out;
}

RgbImage onehot_to_rgb(const SemanticLabelMap& m, const ClassRegistry& registry) {
    if (static_cast<std::size_t>(m.channels()) != registry.size()) {
        throw std::invalid_argument("onehot_to_rgb: map has " + std::to_string(m.channels()) + " channels, registry '" +
                                    registry.name() + "' has " + std::to_string(registry.size()));
    }
    RgbImage out(m.height(), m.width());
    for (int r = 0; r < m.height(); ++r) {
        for (int c = 0; c < m.width(); ++c) out.set_pixel(r, c, registry[m.argmax(r, c)].rgb);
    }
    return out;
}

MergeTable::MergeTable(ClassRegistry source, ClassRegistry target,
                       const std::vector<std::pair<std::string, std::string>>& mapping)
    : source_(std::move(source)), target_(std::move(target)), target_of_(source_.size(), source_.size()) {
    for (const auto& [from, to] : mapping) {
        const auto s = source_.index_of(from);
        if (!s) throw std::invalid_argument("merge table: '" + from + "' is not in registry '" + source_.name() + "'");
        if (target_of_[*s] != source_.size()) throw std::invalid_argument("merge table: '" + from + "' mapped twice");
        const auto t = to == "REMOVE" ? std::optional<std::size_t>{0} : target_.index_of(to);
        if (!t) throw std::invalid_argument("merge table: '" + to + "' is not in registry '" + target_.name() + "'");
        target_of_[*s] = *t;
    }
    for (std::size_t i = 0; i < target_of_.size(); ++i) {
        if (target_of_[i] == source_.size()) {
            throw std::invalid_argument("merge table: source class '" + source_[i].name + "' has no target");
        }
    }
}

SemanticLabelMap merge_classes(const SemanticLabelMap& m, const MergeTable& table) {
    if (static_cast<std::size_t>(m.channels()) != table.source().size()) {
        throw std::invalid_argument("merge_classes: map has " + std::to_string(m.channels()) +
                                    " channels but source registry '" + table.source().name() + "' has " +
                                    std::to_string(table.source().size()));
    }
    SemanticLabelMap out(m.height(), m.width(), static_cast<int>(table.target().size()));
    for (int r = 0; r < m.height(); ++r) {
        for (int c = 0; c < m.width(); ++c) {
            for (int ch = 0; ch < m.channels(); ++ch) {
                out.at(r, c, static_cast<int>(table.target_of(ch))) += m.at(r, c, ch);
            }
        }
    }
    return out;
}

DepthUnit parse_depth_unit(const std::string& descriptor) {
    if (descriptor == "m") return {descriptor, 1.0};
    if (descriptor == "cm") return {descriptor, 0.01};
    if (descriptor == "mm") return {descriptor, 0.001};
    static const std::regex fraction(R"(1/([0-9]+(\.[0-9]+)?) m)");
    std::smatch match;
    if (std::regex_match(descriptor, match, fraction)) {
        const double denom = std::stod(match[1].str());
        if (denom > 0) return {descriptor, 1.0 / denom};
    }
    throw std::invalid_argument("unknown depth unit '" + descriptor + "' (expected m, cm, mm or '1/N m')");
}

ConvertedSample normalize_and_convert(const RawSample& raw, const DepthUnit& unit, const ClassRegistry* registry,
                                      double depth_cap) {
    ConvertedSample out;
    auto& s = out.sample;
    s.intrinsics = raw.intrinsics;
    s.dataset_id = raw.dataset_id;
    s.frame_id = raw.frame_id;
    std::vector<float> pixels(raw.image.data().size());
    std::transform(raw.image.data().begin(), raw.image.data().end(), pixels.begin(),
                   [](std::uint8_t v) { return static_cast<float>(v) / 255.0F; });
    s.image = ImageTensor(raw.image.height(), raw.image.width(), std::move(pixels));

    if (raw.label) {
        if (registry == nullptr) throw std::invalid_argument("normalize_and_convert: label present but no registry");
        auto onehot = rgb_to_onehot(*raw.label, *registry);
        s.semantic = std::move(onehot.map);
        out.unmatched_label_pixels = onehot.unmatched_pixels;
    }
    if (raw.depth) {
        const auto& d = *raw.depth;
        DepthMap depth(d.height(), d.width());
        for (int r = 0; r < d.height(); ++r) {
            for (int c = 0; c < d.width(); ++c) {
                const auto count = d.at(r, c);
                const double meters = count * unit.meters_per_count;
                const bool valid = count > 0 && meters <= depth_cap;
                depth.set(r, c, valid ? static_cast<float>(meters) : 0.0F, valid);
            }
        }
        s.depth = std::move(depth);
    }
    return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<std::size_t> split_indices_train(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
    }
    const auto n_train = std::llround(static_cast<double>(n) * train_fraction);
    if (n_train < 1 || n_train >= static_cast<long long>(n)) {
        throw std::invalid_argument("split too small: " + std::to_string(n) + " items at fraction " +
                                    std::to_string(train_fraction));
    }
    return seeded_permutation(n, seed);
}

}  // namespace semdepth
