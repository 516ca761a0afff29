#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semdepth {

/// Depth labels beyond this range are masked invalid unless a dataset overrides it.
inline constexpr double kDefaultDepthCap = 100.0;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    [[nodiscard]] constexpr std::uint32_t packed() const { return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | b; }
    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

struct ClassEntry {
    std::string name;
    Rgb rgb;
};

/// Ordered set of semantic classes. The position of an entry is its one-hot channel;
/// entry 0 is always "Unlabeled" with color [0,0,0].
class ClassRegistry {
public:
    ClassRegistry(std::string name, std::vector<ClassEntry> entries);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] const ClassEntry& operator[](std::size_t i) const { return entries_.at(i); }
    [[nodiscard]] std::span<const ClassEntry> entries() const { return entries_; }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view class_name) const;
    [[nodiscard]] std::optional<std::size_t> index_of(Rgb rgb) const;

    friend bool operator==(const ClassRegistry& a, const ClassRegistry& b);

private:
    std::string name_;
    std::vector<ClassEntry> entries_;
    std::unordered_map<std::uint32_t, std::size_t> by_rgb_;
};

/// Dense row-major H×W×C buffer with the channel index varying fastest.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int height, int width, int channels, T fill = T{})
        : height_(height), width_(width), channels_(channels),
          data_(checked_size(height, width, channels), fill) {}
    Grid(int height, int width, int channels, std::vector<T> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
        if (data_.size() != checked_size(height, width, channels)) {
            throw std::invalid_argument("grid buffer size does not match its dimensions");
        }
    }

    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
    [[nodiscard]] bool same_extent(int height, int width) const { return height_ == height && width_ == width; }

    [[nodiscard]] const T& at(int row, int col, int ch = 0) const { return data_[offset(row, col, ch)]; }
    [[nodiscard]] T& at(int row, int col, int ch = 0) { return data_[offset(row, col, ch)]; }

    [[nodiscard]] std::span<const T> data() const { return data_; }
    [[nodiscard]] std::span<T> data() { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_size(int h, int w, int c) {
        if (h < 0 || w < 0 || c < 0) throw std::invalid_argument("grid dimensions must be non-negative");
        return static_cast<std::size_t>(h) * w * c;
    }
    [[nodiscard]] std::size_t offset(int row, int col, int ch) const {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

/// RGB input with values in [0,1].
class ImageTensor : public Grid<float> {
public:
    ImageTensor() = default;
    ImageTensor(int height, int width, float fill = 0.0F) : Grid(height, width, 3, fill) {}
    ImageTensor(int height, int width, std::vector<float> data) : Grid(height, width, 3, std::move(data)) {}
};

/// 8-bit three-channel image (camera frames and RGB-encoded label maps).
class RgbImage : public Grid<std::uint8_t> {
public:
    RgbImage() = default;
    RgbImage(int height, int width, Rgb fill = {});
    RgbImage(int height, int width, std::vector<std::uint8_t> data) : Grid(height, width, 3, std::move(data)) {}

    [[nodiscard]] Rgb pixel(int row, int col) const { return {at(row, col, 0), at(row, col, 1), at(row, col, 2)}; }
    void set_pixel(int row, int col, Rgb rgb);
};

/// H×W×n class scores. Ground truth is one-hot; predictions lie in [0,1].
class SemanticLabelMap : public Grid<float> {
public:
    SemanticLabelMap() = default;
    SemanticLabelMap(int height, int width, int channels, float fill = 0.0F) : Grid(height, width, channels, fill) {}
    SemanticLabelMap(int height, int width, int channels, std::vector<float> data)
        : Grid(height, width, channels, std::move(data)) {}

    /// Channel with the largest value; ties resolve to the lowest index.
    [[nodiscard]] int argmax(int row, int col) const;
    [[nodiscard]] static SemanticLabelMap one_hot(int height, int width, int channels, std::span<const int> labels);
};

/// Single-channel edge or weight map.
class EdgeMap : public Grid<float> {
public:
    EdgeMap() = default;
    EdgeMap(int height, int width, float fill = 0.0F) : Grid(height, width, 1, fill) {}
    EdgeMap(int height, int width, std::vector<float> data) : Grid(height, width, 1, std::move(data)) {}
};

/// Metric depth with an explicit validity mask. Invalid pixels carry no meaning in `values`.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int height, int width);
    DepthMap(int height, int width, std::vector<float> values, std::vector<std::uint8_t> valid);

    /// All pixels valid; the form used for network predictions.
    [[nodiscard]] static DepthMap dense(int height, int width, std::vector<float> values);

    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] std::size_t pixel_count() const { return values_.size(); }

    [[nodiscard]] float value(int row, int col) const { return values_[index(row, col)]; }
    [[nodiscard]] bool valid(int row, int col) const { return valid_[index(row, col)] != 0; }
    void set(int row, int col, float value, bool valid);

    [[nodiscard]] std::span<const float> values() const { return values_; }
    [[nodiscard]] std::span<const std::uint8_t> valid_mask() const { return valid_; }
    [[nodiscard]] std::size_t valid_count() const;

    friend bool operator==(const DepthMap&, const DepthMap&) = default;

private:
    [[nodiscard]] std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width_ + col; }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> values_;
    std::vector<std::uint8_t> valid_;
};

struct CameraIntrinsics {
    double focal_length_px = 0.0;
    int width_px = 0;
    int height_px = 0;

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct Sample {
    ImageTensor image;
    std::optional<SemanticLabelMap> semantic;
    std::optional<DepthMap> depth;
    CameraIntrinsics intrinsics;
    std::string dataset_id;
    std::string frame_id;
};

/// Angular field of view in degrees, 2·atan(dim / 2f). Throws std::domain_error on non-positive input.
[[nodiscard]] double afov_of(double dim_px, double focal_length_px);

/// Inverse of afov_of: the sensor extent that subtends `afov_deg` at focal length f.
[[nodiscard]] double extent_for_afov(double afov_deg, double focal_length_px);

/// Lists every broken invariant of `s`; an empty result means the sample is well formed.
[[nodiscard]] std::vector<std::string> validate_sample(const Sample& s, double depth_cap = kDefaultDepthCap);

}  // namespace semdepth
