#include "semdepth/blocks.hpp"

#include <stdexcept>

namespace semdepth {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv2d conv(int in, int out, int kh, int kw, int stride = 1, int pad = 0, bool bias = false) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, {kh, kw}).stride(stride).padding(pad).bias(bias));
}

void check_spatial(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    if (a.dim() != 4 || b.dim() != 4 || a.size(0) != b.size(0) || a.size(2) != b.size(2) || a.size(3) != b.size(3)) {
        throw std::invalid_argument(std::string(what) + ": inputs must be NCHW with matching batch and extent");
    }
}

}  // namespace

ResidualUnitImpl::ResidualUnitImpl(ResidualKind kind, int in_channels, int out_channels, int stride)
    : kind_(kind), in_(in_channels), out_(out_channels), stride_(stride) {
    if (in_channels < 1 || out_channels < 1 || stride < 1) {
        throw std::invalid_argument("residual unit: channels and stride must be positive");
    }
    if (kind == ResidualKind::Skip && (in_channels != out_channels || stride != 1)) {
        throw std::invalid_argument("residual unit: skip kind needs in == out channels and stride 1");
    }
    const int mid = std::max(1, out_channels / 4);
    conv1 = register_module("conv1", conv(in_channels, mid, 1, 1));
    bn1 = register_module("bn1", nn::BatchNorm2d(mid));
    conv2 = register_module("conv2", conv(mid, mid, 3, 3, stride, 1));
    bn2 = register_module("bn2", nn::BatchNorm2d(mid));
    conv3 = register_module("conv3", conv(mid, out_channels, 1, 1));
    bn3 = register_module("bn3", nn::BatchNorm2d(out_channels));
    if (kind == ResidualKind::Projection) {
        shortcut_conv = register_module("shortcut_conv", conv(in_channels, out_channels, 1, 1, stride));
        shortcut_bn = register_module("shortcut_bn", nn::BatchNorm2d(out_channels));
    }
}

torch::Tensor ResidualUnitImpl::forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = torch::relu(bn2(conv2(y)));
    y = bn3(conv3(y));
    const auto shortcut = kind_ == ResidualKind::Projection ? shortcut_bn(shortcut_conv(x)) : x;
    return torch::relu(y + shortcut);
}

TensorSpec ResidualUnitImpl::output_spec(const TensorSpec& in) const {
    if (in.channels != in_) throw std::invalid_argument("residual unit: input channel mismatch");
    return {(in.height - 1) / stride_ + 1, (in.width - 1) / stride_ + 1, out_};
}

torch::Tensor interleave(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& c,
                         const torch::Tensor& d) {
    if (!a.sizes().equals(b.sizes()) || !a.sizes().equals(c.sizes()) || !a.sizes().equals(d.sizes()) || a.dim() != 4) {
        throw std::invalid_argument("interleave: four NCHW tensors of identical shape expected");
    }
    const auto n = a.size(0);
    const auto ch = a.size(1);
    const auto h = a.size(2);
    const auto w = a.size(3);
    auto top = torch::stack({a, b}, -1).reshape({n, ch, h, 2 * w});
    auto bottom = torch::stack({c, d}, -1).reshape({n, ch, h, 2 * w});
    return torch::stack({top, bottom}, 3).reshape({n, ch, 2 * h, 2 * w});
}

UpSamplingBlockImpl::UpSamplingBlockImpl(int in_channels, int out_channels) : out_(out_channels) {
    if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("up-sampling block: channels must be positive");
    auto make = [&](const std::string& prefix, Branch& br) {
        br.a = register_module(prefix + "_a", conv(in_channels, out_channels, 3, 3));
        br.b = register_module(prefix + "_b", conv(in_channels, out_channels, 3, 2));
        br.c = register_module(prefix + "_c", conv(in_channels, out_channels, 2, 3));
        br.d = register_module(prefix + "_d", conv(in_channels, out_channels, 2, 2));
    };
    make("upper", upper);
    make("lower", lower);
    upper_bn1 = register_module("upper_bn1", nn::BatchNorm2d(out_channels));
    upper_conv = register_module("upper_conv", conv(out_channels, out_channels, 3, 3, 1, 1));
    upper_bn2 = register_module("upper_bn2", nn::BatchNorm2d(out_channels));
    lower_bn = register_module("lower_bn", nn::BatchNorm2d(out_channels));
}

torch::Tensor UpSamplingBlockImpl::unpool(Branch& br, const torch::Tensor& x) {
    // Padding order for constant_pad_nd is (left, right, top, bottom).
    auto a = br.a->forward(torch::constant_pad_nd(x, {1, 1, 1, 1}));
    auto b = br.b->forward(torch::constant_pad_nd(x, {0, 1, 1, 1}));
    auto c = br.c->forward(torch::constant_pad_nd(x, {1, 1, 0, 1}));
    auto d = br.d->forward(torch::constant_pad_nd(x, {0, 1, 0, 1}));
    return interleave(a, b, c, d);
}

torch::Tensor UpSamplingBlockImpl::forward(const torch::Tensor& x) {
    auto up = upper_bn2(upper_conv(torch::relu(upper_bn1(unpool(upper, x)))));
    auto low = lower_bn(unpool(lower, x));
    return torch::relu(up + low);
}

TensorSpec UpSamplingBlockImpl::output_spec(const TensorSpec& in) const {
    return {2 * in.height, 2 * in.width, out_};
}

torch::Tensor sobel_edges(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 3) throw std::invalid_argument("sobel_edges: expected [B,3,H,W]");
    // Separable form: central difference first, then the [1 2 1] smoothing. Flat regions
    // come out exactly zero, which a fused 3×3 conv does not guarantee.
    using torch::indexing::None;
    using torch::indexing::Slice;
    const auto p = F::pad(images, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
    const auto dx = p.index({Slice(), Slice(), Slice(), Slice(2, None)}) - p.index({Slice(), Slice(), Slice(), Slice(0, -2)});
    const auto dy = p.index({Slice(), Slice(), Slice(2, None), Slice()}) - p.index({Slice(), Slice(), Slice(0, -2), Slice()});
    const auto smooth_rows = [](const torch::Tensor& t) {
        return t.index({Slice(), Slice(), Slice(0, -2), Slice()}) + 2 * t.index({Slice(), Slice(), Slice(1, -1), Slice()}) +
               t.index({Slice(), Slice(), Slice(2, None), Slice()});
    };
    const auto smooth_cols = [](const torch::Tensor& t) {
        return t.index({Slice(), Slice(), Slice(), Slice(0, -2)}) + 2 * t.index({Slice(), Slice(), Slice(), Slice(1, -1)}) +
               t.index({Slice(), Slice(), Slice(), Slice(2, None)});
    };
    const auto gx = smooth_rows(dx);  // [B,3,H,W]
    const auto gy = smooth_cols(dy);
    const auto sq = gx.square() + gy.square();
    // sqrt has an infinite derivative at 0; the epsilon keeps flat regions differentiable.
    const auto mag = torch::where(sq > 0, torch::sqrt(sq.clamp_min(1e-20)), torch::zeros_like(sq));
    return mag.sum(1, true);
}

torch::Tensor semantic_mask(const torch::Tensor& images, const torch::Tensor& semantic, int class_index) {
    check_spatial(images, semantic, "semantic_mask");
    if (class_index < 0 || class_index >= semantic.size(1)) {
        throw std::out_of_range("semantic_mask: class index " + std::to_string(class_index) + " out of range");
    }
    return images * semantic.narrow(1, class_index, 1);
}

torch::Tensor semantic_edges(const torch::Tensor& edges, const torch::Tensor& semantic) {
    check_spatial(edges, semantic, "semantic_edges");
    if (edges.size(1) != 1) throw std::invalid_argument("semantic_edges: edges must have one channel");
    return edges * semantic;
}

torch::Tensor to_tensor(const Grid<float>& g) {
    auto hwc = torch::from_blob(const_cast<float*>(g.data().data()), {g.height(), g.width(), g.channels()},
                                torch::kFloat32);
    return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous();
}

std::vector<float> to_hwc(const torch::Tensor& chw) {
    auto t = chw.dim() == 4 ? chw.squeeze(0) : chw;
    t = t.permute({1, 2, 0}).contiguous().to(torch::kCPU, torch::kFloat32);
    return {t.data_ptr<float>(), t.data_ptr<float>() + t.numel()};
}

EdgeMap sobel_edges(const ImageTensor& image) {
    torch::NoGradGuard guard;
    return {image.height(), image.width(), to_hwc(sobel_edges(to_tensor(image)))};
}

ImageTensor semantic_mask(const ImageTensor& image, const SemanticLabelMap& m, int class_index) {
    if (!m.same_extent(image.height(), image.width())) throw std::invalid_argument("semantic_mask: extent mismatch");
    torch::NoGradGuard guard;
    return {image.height(), image.width(), to_hwc(semantic_mask(to_tensor(image), to_tensor(m), class_index))};
}

SemanticLabelMap semantic_edges(const EdgeMap& edges, const SemanticLabelMap& m) {
    if (!m.same_extent(edges.height(), edges.width())) throw std::invalid_argument("semantic_edges: extent mismatch");
    torch::NoGradGuard guard;
    return {m.height(), m.width(), m.channels(), to_hwc(semantic_edges(to_tensor(edges), to_tensor(m)))};
}

}  // namespace semdepth
