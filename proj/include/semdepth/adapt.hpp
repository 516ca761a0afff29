#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semdepth/core.hpp"

namespace semdepth {

// ---------------------------------------------------------------------------
// Field-of-view unification

struct TargetSize {
    int width = 1216;
    int height = 352;

    friend bool operator==(const TargetSize&, const TargetSize&) = default;
};

struct CropPlan {
    CameraIntrinsics source;
    int crop_width = 0;
    int crop_height = 0;
    int origin_row = 0;
    int origin_col = 0;
    TargetSize target;
    double achieved_h_afov = 0.0;
    double achieved_v_afov = 0.0;
};

struct AfovTarget {
    double horizontal_deg = 0.0;
    double vertical_deg = 0.0;
};

/// AFOV of the reference camera all datasets are reduced to: the 1216×352 frames of
/// Lyft Level 5 at f = 880 px.
[[nodiscard]] AfovTarget reference_afov(const std::string& reference);

/// Centered crop that reduces `src` to the target field of view. AFOV can only shrink, so an
/// axis narrower than the target keeps its full extent.
///
/// Width is 2f·tan(θh/2) rounded up to the next even integer; height is 2f·tan(θv/2) rounded
/// up to the next integer. Extents within 0.01 px of an integer are snapped first, which absorbs
/// the two-decimal rounding of AFOV targets quoted in degrees.
[[nodiscard]] CropPlan plan_afov_crop(const CameraIntrinsics& src, double target_h_afov, double target_v_afov,
                                      TargetSize target = {});

/// Crops to the plan and resizes to its target size: bilinear for the image, nearest neighbour
/// for labels, depth and the validity mask. Focal length is rescaled by target_width / crop_width.
[[nodiscard]] Sample apply_crop_resize(const Sample& s, const CropPlan& plan);

// ---------------------------------------------------------------------------
// Semantic label encodings

struct OneHotResult {
    SemanticLabelMap map;
    std::size_t unmatched_pixels = 0;
};

/// Exact palette lookup; colors missing from the registry become Unlabeled (channel 0).
[[nodiscard]] OneHotResult rgb_to_onehot(const RgbImage& label_image, const ClassRegistry& registry);

/// Per pixel, the palette color of the argmax channel (ties go to the lowest channel).
[[nodiscard]] RgbImage onehot_to_rgb(const SemanticLabelMap& m, const ClassRegistry& registry);

/// Many-to-one map from a source palette onto a target palette.
class MergeTable {
public:
    /// `mapping` pairs source class names with target class names; "REMOVE" sends a class to
    /// Unlabeled. Each source class must appear exactly once.
    MergeTable(ClassRegistry source, ClassRegistry target,
               const std::vector<std::pair<std::string, std::string>>& mapping);

    [[nodiscard]] const ClassRegistry& source() const { return source_; }
    [[nodiscard]] const ClassRegistry& target() const { return target_; }
    [[nodiscard]] std::size_t target_of(std::size_t source_index) const { return target_of_.at(source_index); }

private:
    ClassRegistry source_;
    ClassRegistry target_;
    std::vector<std::size_t> target_of_;
};

/// Sums source channels into their target channels; one-hot input stays one-hot.
[[nodiscard]] SemanticLabelMap merge_classes(const SemanticLabelMap& m, const MergeTable& table);

// ---------------------------------------------------------------------------
// Raw frames and unit conversion

/// Scale of one raw 16-bit depth count. Descriptors: "m", "cm", "mm", or "1/N m".
struct DepthUnit {
    std::string descriptor = "1/256 m";
    double meters_per_count = 1.0 / 256.0;
};

[[nodiscard]] DepthUnit parse_depth_unit(const std::string& descriptor);

struct RawSample {
    RgbImage image;
    std::optional<RgbImage> label;
    std::optional<Grid<std::uint16_t>> depth;
    CameraIntrinsics intrinsics;
    std::string dataset_id;
    std::string frame_id;
};

struct ConvertedSample {
    Sample sample;
    std::size_t unmatched_label_pixels = 0;
};

/// Image to [0,1], labels to one-hot, depth to meters. A depth pixel is valid when its raw
/// count is positive and the converted value does not exceed `depth_cap`.
[[nodiscard]] ConvertedSample normalize_and_convert(const RawSample& raw, const DepthUnit& unit,
                                                    const ClassRegistry* registry,
                                                    double depth_cap = kDefaultDepthCap);

// ---------------------------------------------------------------------------
// Dataset manifests
//
// Layout: <root>/<dataset_id>/{image,semantic,depth}/<frame_id>.png

struct FrameFiles {
    std::string frame_id;
    std::filesystem::path image;
    std::optional<std::filesystem::path> semantic;
    std::optional<std::filesystem::path> depth;
};

struct DatasetManifest {
    std::string dataset_id;
    std::filesystem::path root;
    CameraIntrinsics intrinsics;
    DepthUnit depth_unit;
    std::string registry_name = "common";
    std::uint64_t split_seed = 0;
    double train_fraction = 0.75;
    double depth_cap = kDefaultDepthCap;
    std::vector<FrameFiles> frames;

    [[nodiscard]] bool has_depth() const;
    [[nodiscard]] bool has_semantic() const;
    [[nodiscard]] std::filesystem::path dataset_dir() const { return root / dataset_id; }
};

/// Reads a manifest (keys dataset_id, root, focal_length_px, depth_unit, registry_name,
/// split_seed, train_fraction; optional width_px, height_px, depth_cap, frames) and resolves
/// every frame. `root` is relative to the manifest's directory. Missing files raise an error
/// listing every missing path.
[[nodiscard]] DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest keys; root is stored relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

template <typename T>
struct Split {
    std::vector<T> train;
    std::vector<T> test;
};

/// Deterministic shuffle-and-cut; round(n·train_fraction) items go to train.
/// Throws when either side would be empty.
template <typename T>
[[nodiscard]] Split<T> split_dataset(const std::vector<T>& items, double train_fraction, std::uint64_t seed);

/// The shuffled order used by split_dataset; validates that both sides are non-empty.
[[nodiscard]] std::vector<std::size_t> split_indices_train(std::size_t n, double train_fraction, std::uint64_t seed);

/// Frames of `manifest` selected by `which` ("train", "test" or "all").
[[nodiscard]] std::vector<FrameFiles> select_frames(const DatasetManifest& manifest, const std::string& which);

[[nodiscard]] Sample load_sample(const DatasetManifest& manifest, const FrameFiles& frame);
[[nodiscard]] std::vector<Sample> load_samples(const DatasetManifest& manifest, const std::vector<FrameFiles>& frames);

/// Writes `s` into the dataset layout below `root`. Depth is encoded as 16-bit counts of
/// `unit`; invalid pixels are written as 0.
void write_sample(const std::filesystem::path& root, const Sample& s, const ClassRegistry& registry,
                  const DepthUnit& unit);

// ---------------------------------------------------------------------------
// Deterministic random helpers shared by the adaptation tools.

/// Fisher–Yates permutation of 0..n-1 driven by a 64-bit Mersenne Twister.
[[nodiscard]] std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

template <typename T>
Split<T> split_dataset(const std::vector<T>& items, double train_fraction, std::uint64_t seed) {
    const auto perm = split_indices_train(items.size(), train_fraction, seed);
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(items.size()) * train_fraction));
    Split<T> out;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        (i < n_train ? out.train : out.test).push_back(items[perm[i]]);
    }
    return out;
}

}  // namespace semdepth
