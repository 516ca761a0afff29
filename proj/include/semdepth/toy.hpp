#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "semdepth/core.hpp"

namespace semdepth {

inline constexpr double kToyCameraHeight = 1.6;

/// Same horizontal AFOV as the 1216-wide reference camera at f = 880.
[[nodiscard]] inline double toy_focal_length(int width) { return width * 880.0 / 1216.0; }

/// Fronto-parallel rectangle standing on the ground plane. Meters, camera frame
/// (x right, y down, z forward); `x` is the lateral position of the box center.
struct ToyBox {
    int class_index = 0;
    double depth = 0.0;
    double x = 0.0;
    double width = 0.0;
    double height = 0.0;
    /// Base color in [0,1]; the registry color of the class when empty.
    std::optional<std::array<double, 3>> color;
};

struct ToyOptions {
    double depth_cap = kDefaultDepthCap;
    /// Per-frame brightness factor drawn from [1 - jitter, 1].
    double illumination_jitter = 0.0;
    /// Amplitude of uniform per-pixel noise added to the image.
    double noise = 0.0;
    /// Each box gets a uniform random base color, so the image alone no longer tells its class.
    bool random_object_colors = false;
};

/// Renders ground ("Road"), sky ("Sky") and `boxes` in painter's order (farthest first) with
/// a pinhole camera at principal point (W/2, H/2), pixel centers at +0.5. Ground depth is
/// f·h_cam / (v − c_y); ground beyond the cap and the sky are invalid depth.
[[nodiscard]] Sample render_toy_scene(int width, int height, const ClassRegistry& registry,
                                      const std::vector<ToyBox>& boxes, const ToyOptions& options = {},
                                      double brightness = 1.0, std::uint64_t noise_seed = 0);

/// Random scenes: 2 to 6 boxes from the registry classes that have a toy shape.
/// Throws unless width and height are positive multiples of 32 and n_samples ≥ 1.
[[nodiscard]] std::vector<Sample> generate_toy_dataset(int n_samples, int width, int height,
                                                       const ClassRegistry& registry, std::uint64_t seed,
                                                       const ToyOptions& options = {});

/// Uniform double in [0, 1) with 53 random bits.
[[nodiscard]] inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace semdepth
