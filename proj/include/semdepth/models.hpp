#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "semdepth/core.hpp"
#include "semdepth/keyvalue.hpp"
#include "semdepth/losses.hpp"

namespace semdepth {

enum class Variant { M0, M1, M2, M3, M4, M5, M6, M7, M18, M19, M20, M21, UNET };

[[nodiscard]] Variant parse_variant(const std::string& s);
[[nodiscard]] std::string to_string(Variant v);
[[nodiscard]] const std::vector<Variant>& all_variants();

/// Variants whose forward pass consumes the semantic label map.
[[nodiscard]] bool requires_semantic(Variant v);
/// M2 to M5 produce per-class depth in addition to the summed depth.
[[nodiscard]] bool has_semantic_decoders(Variant v);
/// M18 to M21.
[[nodiscard]] bool is_slim(Variant v);
[[nodiscard]] LossKind default_loss(Variant v);

struct ModelSpec {
    Variant variant = Variant::M0;
    int width = 64;
    int height = 64;
    int n_classes = 0;
    double width_scale = 1.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on sizes not divisible by 32, a scale outside (0,1],
    /// or a semantic variant without classes.
    void validate() const;
    [[nodiscard]] int input_channels() const;
    [[nodiscard]] KeyValueFile to_keyvalue() const;
    [[nodiscard]] static ModelSpec from_keyvalue(const KeyValueFile& kv, const std::string& prefix = "");

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ModelOutputs {
    torch::Tensor depth;                         ///< [B,1,H,W]; undefined for UNET
    std::optional<torch::Tensor> semantic_depth;  ///< [B,n,H,W], M2 to M5
    std::optional<torch::Tensor> segmentation;    ///< [B,n,H,W] softmax, UNET
};

class ModelImpl : public torch::nn::Module {
public:
    explicit ModelImpl(ModelSpec spec) : spec_(std::move(spec)) {}

    /// images [B,3,H,W] in [0,1]; semantic [B,n,H,W] one-hot, required by semantic variants.
    virtual ModelOutputs forward(const torch::Tensor& images, const std::optional<torch::Tensor>& semantic) = 0;

    [[nodiscard]] const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
};

using Model = std::shared_ptr<ModelImpl>;

/// Builds and initializes (He fan-in normal convs, unit/zero norms) from `spec.seed`.
[[nodiscard]] Model build(const ModelSpec& spec);

/// Variant-specific input tensor: image, image + labels, Sobel edges, or semantic edges.
[[nodiscard]] torch::Tensor network_input(Variant v, const torch::Tensor& images,
                                          const std::optional<torch::Tensor>& semantic);

[[nodiscard]] std::int64_t parameter_count(const torch::nn::Module& module);

/// Writes `<dir>/model_spec.txt` and `<dir>/weights.pt`.
void save_checkpoint(const Model& model, const std::filesystem::path& dir);
[[nodiscard]] Model load_checkpoint(const std::filesystem::path& dir, const torch::Device& device = torch::kCPU);

/// Device named by SEMDEPTH_DEVICE (default cpu).
[[nodiscard]] torch::Device default_device();

struct Prediction {
    std::optional<DepthMap> depth;
    std::optional<SemanticLabelMap> segmentation;  ///< argmax-binarized
};

/// Single-sample inference in eval mode.
[[nodiscard]] Prediction predict(const Model& model, const Sample& s);

}  // namespace semdepth
