#include "semdepth/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string_view>

namespace semdepth {

namespace {

struct Shape {
    std::string_view class_name;
    double width;
    double height;
    double min_depth;
    double max_depth;
};

constexpr std::array<Shape, 6> kShapes = {{
    {"Car", 1.8, 1.5, 4.0, 50.0},
    {"Person", 0.6, 1.8, 3.0, 30.0},
    {"Bicycle", 1.7, 1.1, 3.0, 30.0},
    {"Pole", 0.3, 5.0, 4.0, 50.0},
    {"Vegetation", 3.0, 4.0, 8.0, 60.0},
    {"Building", 12.0, 9.0, 20.0, 60.0},
}};

constexpr std::array<float, 3> kSkyColor = {0.6F, 0.75F, 0.9F};

std::size_t require_class(const ClassRegistry& registry, std::string_view name) {
    const auto idx = registry.index_of(name);
    if (!idx) throw std::invalid_argument("toy scenes need a '" + std::string(name) + "' class in the registry");
    return *idx;
}

}  // namespace

Sample render_toy_scene(int width, int height, const ClassRegistry& registry, const std::vector<ToyBox>& boxes,
                        const ToyOptions& options, double brightness, std::uint64_t noise_seed) {
    const auto road = static_cast<int>(require_class(registry, "Road"));
    const auto sky = static_cast<int>(require_class(registry, "Sky"));
    const int n = static_cast<int>(registry.size());
    const double f = toy_focal_length(width);
    const double cx = width / 2.0;
    const double cy = height / 2.0;
    const double cap = options.depth_cap;

    std::vector<int> label(static_cast<std::size_t>(width) * height);
    std::vector<double> depth(label.size(), 0.0);
    std::vector<int> box_of(label.size(), -1);
    for (int r = 0; r < height; ++r) {
        const double v = r + 0.5 - cy;
        for (int c = 0; c < width; ++c) {
            const auto i = static_cast<std::size_t>(r) * width + c;
            if (v > 0) {
                label[i] = road;
                depth[i] = f * kToyCameraHeight / v;
            } else {
                label[i] = sky;
            }
        }
    }

    std::vector<ToyBox> order = boxes;
    std::stable_sort(order.begin(), order.end(), [](const ToyBox& a, const ToyBox& b) { return a.depth > b.depth; });
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& b = order[k];
        if (b.class_index < 0 || b.class_index >= n) throw std::invalid_argument("toy box class out of range");
        const double left = cx + f * (b.x - b.width / 2) / b.depth;
        const double right = cx + f * (b.x + b.width / 2) / b.depth;
        const double top = cy + f * (kToyCameraHeight - b.height) / b.depth;
        const double bottom = cy + f * kToyCameraHeight / b.depth;
        for (int r = 0; r < height; ++r) {
            const double v = r + 0.5;
            if (v < top || v >= bottom) continue;
            for (int c = 0; c < width; ++c) {
                const double u = c + 0.5;
                if (u < left || u >= right) continue;
                const auto i = static_cast<std::size_t>(r) * width + c;
                label[i] = b.class_index;
                depth[i] = b.depth;
                box_of[i] = static_cast<int>(k);
            }
        }
    }

    Sample s;
    s.intrinsics = {f, width, height};
    s.image = ImageTensor(height, width);
    s.semantic = SemanticLabelMap::one_hot(height, width, n, label);
    s.depth = DepthMap(height, width);
    std::mt19937_64 noise_rng(noise_seed);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const auto i = static_cast<std::size_t>(r) * width + c;
            const bool valid = label[i] != sky && depth[i] <= cap;
            s.depth->set(r, c, valid ? static_cast<float>(depth[i]) : 0.0F, valid);
            const double shade = label[i] == sky ? 1.0 : 1.0 - 0.6 * std::min(depth[i], cap) / cap;
            const Rgb base = registry[label[i]].rgb;
            std::array<double, 3> rgb = {base.r / 255.0, base.g / 255.0, base.b / 255.0};
            if (box_of[i] >= 0 && order[box_of[i]].color) rgb = *order[box_of[i]].color;
            for (int ch = 0; ch < 3; ++ch) {
                double value = (label[i] == sky ? kSkyColor[ch] : rgb[ch] * shade) * brightness;
                if (options.noise > 0) value += options.noise * (2.0 * unit_uniform(noise_rng) - 1.0);
                s.image.at(r, c, ch) = static_cast<float>(std::clamp(value, 0.0, 1.0));
            }
        }
    }
    return s;
}

std::vector<Sample> generate_toy_dataset(int n_samples, int width, int height, const ClassRegistry& registry,
                                         std::uint64_t seed, const ToyOptions& options) {
    if (n_samples < 1) throw std::invalid_argument("toy dataset needs at least one sample");
    if (width <= 0 || height <= 0 || width % 32 != 0 || height % 32 != 0) {
        throw std::invalid_argument("toy size " + std::to_string(width) + "x" + std::to_string(height) +
                                    " is not divisible by 32");
    }
    std::vector<std::pair<int, Shape>> shapes;
    for (const auto& shape : kShapes) {
        if (auto idx = registry.index_of(shape.class_name)) shapes.emplace_back(static_cast<int>(*idx), shape);
    }
    const double f = toy_focal_length(width);
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    out.reserve(n_samples);
    for (int k = 0; k < n_samples; ++k) {
        std::vector<ToyBox> boxes;
        if (!shapes.empty()) {
            const int count = 2 + static_cast<int>(rng() % 5);
            for (int b = 0; b < count; ++b) {
                const auto& [cls, shape] = shapes[rng() % shapes.size()];
                const double z = shape.min_depth + (shape.max_depth - shape.min_depth) * unit_uniform(rng);
                const double half_view = z * (width / 2.0) / f;
                const double x = (2.0 * unit_uniform(rng) - 1.0) * half_view * 0.9;
                const double jitter = 0.8 + 0.4 * unit_uniform(rng);
                ToyBox box{cls, z, x, shape.width * jitter, shape.height * jitter, std::nullopt};
                if (options.random_object_colors) {
                    box.color = std::array<double, 3>{unit_uniform(rng), unit_uniform(rng), unit_uniform(rng)};
                }
                boxes.push_back(box);
            }
        }
        const double brightness = 1.0 - options.illumination_jitter * unit_uniform(rng);
        auto s = render_toy_scene(width, height, registry, boxes, options, brightness, rng());
        s.dataset_id = "toy";
        char id[32];
        std::snprintf(id, sizeof id, "toy_%05d", k);
        s.frame_id = id;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace semdepth
