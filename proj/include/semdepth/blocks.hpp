#pragma once

#include <torch/torch.h>

#include "semdepth/core.hpp"

namespace semdepth {

struct TensorSpec {
    int height = 0;
    int width = 0;
    int channels = 0;

    friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

enum class ResidualKind { Skip, Projection };

/// ResNet bottleneck unit (1×1, 3×3, 1×1 with batch norm; inner width out/4).
/// Skip units add the input unchanged; projection units add a strided 1×1 conv + BN.
class ResidualUnitImpl : public torch::nn::Module {
public:
    ResidualUnitImpl(ResidualKind kind, int in_channels, int out_channels, int stride);

    torch::Tensor forward(const torch::Tensor& x);
    [[nodiscard]] TensorSpec output_spec(const TensorSpec& in) const;
    [[nodiscard]] ResidualKind kind() const { return kind_; }

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
    torch::nn::Conv2d shortcut_conv{nullptr};
    torch::nn::BatchNorm2d shortcut_bn{nullptr};

private:
    ResidualKind kind_;
    int in_;
    int out_;
    int stride_;
};
TORCH_MODULE(ResidualUnit);

/// out[2i][2j] = a, out[2i][2j+1] = b, out[2i+1][2j] = c, out[2i+1][2j+1] = d (NCHW).
[[nodiscard]] torch::Tensor interleave(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& c,
                                       const torch::Tensor& d);

/// Up-projection with four sub-pixel convolutions per branch (3×3, 3×2, 2×3, 2×2).
/// Upper branch: interleave, BN, ReLU, 3×3 conv, BN. Lower branch: interleave, BN.
/// Output is ReLU(upper + lower) at twice the input resolution.
class UpSamplingBlockImpl : public torch::nn::Module {
public:
    UpSamplingBlockImpl(int in_channels, int out_channels);

    torch::Tensor forward(const torch::Tensor& x);
    [[nodiscard]] TensorSpec output_spec(const TensorSpec& in) const;

    struct Branch {
        torch::nn::Conv2d a{nullptr}, b{nullptr}, c{nullptr}, d{nullptr};
    };
    /// The four interleaved maps of a branch before normalization.
    torch::Tensor unpool(Branch& branch, const torch::Tensor& x);

    Branch upper;
    Branch lower;
    torch::nn::BatchNorm2d upper_bn1{nullptr}, upper_bn2{nullptr}, lower_bn{nullptr};
    torch::nn::Conv2d upper_conv{nullptr};

private:
    int out_;
};
TORCH_MODULE(UpSamplingBlock);

/// Sum over RGB channels of √(Gx² + Gy²), 3×3 Sobel kernels, replicate borders. [B,3,H,W] → [B,1,H,W].
[[nodiscard]] torch::Tensor sobel_edges(const torch::Tensor& images);
[[nodiscard]] EdgeMap sobel_edges(const ImageTensor& image);

/// Image pixels kept where channel `class_index` of the label map is set. [B,3,H,W] × [B,n,H,W] → [B,3,H,W].
[[nodiscard]] torch::Tensor semantic_mask(const torch::Tensor& images, const torch::Tensor& semantic, int class_index);
[[nodiscard]] ImageTensor semantic_mask(const ImageTensor& image, const SemanticLabelMap& m, int class_index);

/// Channel c = edges ⊙ m_c. [B,1,H,W] × [B,n,H,W] → [B,n,H,W].
[[nodiscard]] torch::Tensor semantic_edges(const torch::Tensor& edges, const torch::Tensor& semantic);
[[nodiscard]] SemanticLabelMap semantic_edges(const EdgeMap& edges, const SemanticLabelMap& m);

// Conversions between core grids (HWC) and NCHW tensors of batch size 1.
[[nodiscard]] torch::Tensor to_tensor(const Grid<float>& g);
[[nodiscard]] std::vector<float> to_hwc(const torch::Tensor& chw);

}  // namespace semdepth
