#include "semdepth/losses.hpp"

#include <stdexcept>

namespace semdepth {

namespace {

// Mean of |y − y*| / y* in percent over `mask`, with masked-out gt replaced before division.
torch::Tensor masked_mape(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask) {
    const auto m = mask.to(torch::kBool);
    const auto n = m.sum();
    if (n.item<std::int64_t>() == 0) throw std::domain_error("mape loss: no valid pixels");
    const auto safe_gt = torch::where(m, gt, torch::ones_like(gt));
    if ((safe_gt <= 0).any().item<bool>()) throw std::invalid_argument("mape loss: non-positive ground truth in mask");
    const auto rel = torch::where(m, (pred - safe_gt).abs() / safe_gt, torch::zeros_like(pred));
    return 100.0 * rel.sum() / n.to(pred.scalar_type());
}

}  // namespace

torch::Tensor mape_loss(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask) {
    if (!pred.sizes().equals(gt.sizes()) || !pred.sizes().equals(mask.sizes())) {
        throw std::invalid_argument("mape loss: pred, gt and mask shapes differ");
    }
    return masked_mape(pred, gt, mask);
}

torch::Tensor iou_loss(const torch::Tensor& pred, const torch::Tensor& gt) {
    if (!pred.sizes().equals(gt.sizes()) || pred.dim() != 4) throw std::invalid_argument("iou loss: shapes differ");
    if ((pred < 0).any().item<bool>() || (pred > 1).any().item<bool>()) {
        throw std::invalid_argument("iou loss: prediction outside [0,1]");
    }
    const auto inter = (pred * gt).sum({0, 2, 3});
    const auto uni = (pred + gt - pred * gt).sum({0, 2, 3});
    const auto iou = torch::where(uni > 0, inter / uni.clamp_min(1e-12), torch::ones_like(uni));
    return 1.0 - iou.mean();
}

torch::Tensor semantic_depth_loss(const torch::Tensor& semantic_depth, const torch::Tensor& gt,
                                  const torch::Tensor& mask, const torch::Tensor& semantic) {
    const auto n = semantic_depth.size(1);
    const auto target = gt.expand({-1, n, -1, -1});
    const auto m = mask.to(torch::kBool).expand({-1, n, -1, -1}) & (semantic > 0.5);
    return masked_mape(semantic_depth, target, m);
}

torch::Tensor per_class_depth_loss(const torch::Tensor& semantic_depth, const torch::Tensor& gt,
                                   const torch::Tensor& mask, const torch::Tensor& semantic) {
    const auto valid = mask.to(torch::kBool);
    std::vector<torch::Tensor> terms;
    for (std::int64_t c = 0; c < semantic_depth.size(1); ++c) {
        const auto m = valid & (semantic.narrow(1, c, 1) > 0.5);
        if (m.sum().item<std::int64_t>() == 0) continue;
        terms.push_back(masked_mape(semantic_depth.narrow(1, c, 1), gt, m));
    }
    if (terms.empty()) throw std::domain_error("per-class loss: no valid pixels");
    return torch::stack(terms).mean();
}

LossKind parse_loss_kind(const std::string& s) {
    if (s == "mape") return LossKind::Mape;
    if (s == "mape+semantic") return LossKind::MapeSemantic;
    if (s == "mape+per-class") return LossKind::MapePerClass;
    if (s == "iou") return LossKind::Iou;
    throw std::invalid_argument("unknown loss '" + s + "' (mape, mape+semantic, mape+per-class, iou)");
}

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::Mape: return "mape";
        case LossKind::MapeSemantic: return "mape+semantic";
        case LossKind::MapePerClass: return "mape+per-class";
        case LossKind::Iou: return "iou";
    }
    return "?";
}

}  // namespace semdepth
