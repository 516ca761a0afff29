#pragma once

#include <string>

#include <torch/torch.h>

namespace semdepth {

/// MAPE in percent over pixels where `mask` is set. pred/gt/mask: [B,1,H,W].
/// Values of gt outside the mask never reach the result or its gradient.
[[nodiscard]] torch::Tensor mape_loss(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask);

/// 1 − mean over channels of Σ(p·g) / Σ(p + g − p·g). A channel empty in both counts as IoU 1.
[[nodiscard]] torch::Tensor iou_loss(const torch::Tensor& pred, const torch::Tensor& gt);

/// Branch c of `semantic_depth` scored on the valid pixels of class c, all branches pooled into one MAPE.
[[nodiscard]] torch::Tensor semantic_depth_loss(const torch::Tensor& semantic_depth, const torch::Tensor& gt,
                                                const torch::Tensor& mask, const torch::Tensor& semantic);

/// Per-class MAPE of branch c on the valid class-c pixels, averaged over classes that have any.
[[nodiscard]] torch::Tensor per_class_depth_loss(const torch::Tensor& semantic_depth, const torch::Tensor& gt,
                                                 const torch::Tensor& mask, const torch::Tensor& semantic);

enum class LossKind { Mape, MapeSemantic, MapePerClass, Iou };

[[nodiscard]] LossKind parse_loss_kind(const std::string& s);
[[nodiscard]] std::string to_string(LossKind k);

}  // namespace semdepth
