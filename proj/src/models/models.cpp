#include "semdepth/models.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "semdepth/blocks.hpp"

namespace semdepth {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

struct VariantName {
    Variant v;
    const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::M0, "M0"},   {Variant::M1, "M1"},   {Variant::M2, "M2"},   {Variant::M3, "M3"},   {Variant::M4, "M4"},
    {Variant::M5, "M5"},   {Variant::M6, "M6"},   {Variant::M7, "M7"},   {Variant::M18, "M18"}, {Variant::M19, "M19"},
    {Variant::M20, "M20"}, {Variant::M21, "M21"}, {Variant::UNET, "UNET"},
};

nn::Conv2d conv(int in, int out, int k, int stride = 1, int pad = 0, bool bias = false) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).bias(bias));
}

class Scaler {
public:
    explicit Scaler(double s) : s_(s) {}
    int operator()(int c) const { return std::max(2, static_cast<int>(std::lround(c * s_))); }

private:
    double s_;
};

// Stem (7×7/2 conv, BN, ReLU, 3×3/2 max pool) followed by bottleneck stages.
class EncoderImpl : public nn::Module {
public:
    EncoderImpl(int in_channels, int n_stages, const Scaler& sc) {
        constexpr int kWidths[] = {256, 512, 1024, 2048};
        constexpr int kUnits[] = {3, 4, 6, 3};
        stem = register_module("stem", conv(in_channels, sc(64), 7, 2, 3));
        stem_bn = register_module("stem_bn", nn::BatchNorm2d(sc(64)));
        int in = sc(64);
        for (int s = 0; s < n_stages; ++s) {
            const int out = sc(kWidths[s]);
            stages->push_back(ResidualUnit(ResidualKind::Projection, in, out, s == 0 ? 1 : 2));
            for (int u = 1; u < kUnits[s]; ++u) stages->push_back(ResidualUnit(ResidualKind::Skip, out, out, 1));
            in = out;
        }
        register_module("stages", stages);
        out_channels = in;
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(stem_bn(stem(x)));
        y = F::max_pool2d(y, F::MaxPool2dFuncOptions(3).stride(2).padding(1));
        return stages->forward(y);
    }

    nn::Conv2d stem{nullptr};
    nn::BatchNorm2d stem_bn{nullptr};
    nn::Sequential stages;
    int out_channels = 0;
};
TORCH_MODULE(Encoder);

// The M-series: FCRN encoder, 1×1 bottleneck, up-projection decoder, and per-variant
// semantic decoders.
class FcrnNet : public ModelImpl {
public:
    explicit FcrnNet(const ModelSpec& spec) : ModelImpl(spec) {
        const Scaler sc(spec.width_scale);
        const Variant v = spec.variant;
        const bool slim = is_slim(v);
        encoder = register_module("encoder", Encoder(spec.input_channels(), slim ? 3 : 4, sc));

        std::vector<int> widths = slim ? std::vector<int>{512, 256, 128, 64, 32}
                                       : std::vector<int>{1024, 512, 256, 128, 64, 32};
        for (auto& w : widths) w = sc(w);
        bottleneck = register_module("bottleneck", conv(encoder->out_channels, widths[0], 1));
        bottleneck_bn = register_module("bottleneck_bn", nn::BatchNorm2d(widths[0]));

        std::size_t common_ups = widths.size() - 1;
        if (v == Variant::M2 || v == Variant::M3) common_ups = 4;
        if (v == Variant::M4) common_ups = 3;
        for (std::size_t i = 0; i < common_ups; ++i) ups->push_back(UpSamplingBlock(widths[i], widths[i + 1]));
        register_module("ups", ups);
        const int x_channels = widths[common_ups];

        const int n = spec.n_classes;
        if (!has_semantic_decoders(v)) {
            head = register_module("head", conv(x_channels, 1, 3, 1, 1, true));
            return;
        }
        for (int c = 0; c < n; ++c) {
            auto branch = nn::Sequential();
            if (v == Variant::M2 || v == Variant::M3) {
                branch->push_back(UpSamplingBlock(x_channels, sc(32)));
                branch->push_back(conv(sc(32), 1, 3, 1, 1, true));
            } else if (v == Variant::M4) {
                branch->push_back(UpSamplingBlock(x_channels + 3, sc(64)));
                branch->push_back(UpSamplingBlock(sc(64), sc(32)));
                branch->push_back(conv(sc(32), 1, 3, 1, 1, true));
            } else {
                branch->push_back(conv(x_channels + 3, sc(16), 3, 1, 1));
                branch->push_back(nn::BatchNorm2d(sc(16)));
                branch->push_back(nn::ReLU());
                branch->push_back(conv(sc(16), 1, 3, 1, 1, true));
            }
            branches->push_back(branch);
        }
        register_module("branches", branches);
    }

    ModelOutputs forward(const torch::Tensor& images, const std::optional<torch::Tensor>& semantic) override {
        const Variant v = spec().variant;
        auto x = encoder->forward(network_input(v, images, semantic));
        x = bottleneck_bn(bottleneck(x));
        for (const auto& up : *ups) x = up->as<UpSamplingBlock>()->forward(x);

        ModelOutputs out;
        if (!has_semantic_decoders(v)) {
            out.depth = head(x);
            return out;
        }
        const auto& sem = *semantic;
        std::vector<torch::Tensor> parts;
        for (std::size_t c = 0; c < branches->size(); ++c) {
            auto branch = branches->ptr<nn::SequentialImpl>(c);
            const int ci = static_cast<int>(c);
            if (v == Variant::M2 || v == Variant::M3) {
                parts.push_back(branch->forward(x));
            } else if (v == Variant::M4) {
                const auto masked = F::avg_pool2d(semantic_mask(images, sem, ci), F::AvgPool2dFuncOptions(4));
                parts.push_back(branch->forward(torch::cat({x, masked}, 1)));
            } else {
                const auto masked = semantic_mask(images, sem, ci);
                parts.push_back(branch->forward(torch::cat({x, masked}, 1)) * sem.narrow(1, ci, 1));
            }
        }
        out.semantic_depth = torch::cat(parts, 1);
        out.depth = out.semantic_depth->sum(1, true);
        return out;
    }

    Encoder encoder{nullptr};
    nn::Conv2d bottleneck{nullptr};
    nn::BatchNorm2d bottleneck_bn{nullptr};
    nn::ModuleList ups;
    nn::Conv2d head{nullptr};
    nn::ModuleList branches;
};

nn::Sequential double_conv(int in, int out) {
    return nn::Sequential(conv(in, out, 3, 1, 1), nn::BatchNorm2d(out), nn::ReLU(), conv(out, out, 3, 1, 1),
                          nn::BatchNorm2d(out), nn::ReLU());
}

// U-Net with batch norm after every convolution and concatenation, zero-padded
// convolutions and five pooling steps.
class UNet : public ModelImpl {
public:
    explicit UNet(const ModelSpec& spec) : ModelImpl(spec) {
        const Scaler sc(spec.width_scale);
        std::vector<int> w;
        for (int c : {32, 64, 128, 256, 512, 1024}) w.push_back(sc(c));
        int in = 3;
        for (int c : w) {
            down->push_back(double_conv(in, c));
            in = c;
        }
        for (std::size_t l = w.size() - 1; l-- > 0;) {
            upconv->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(w[l + 1], w[l], 2).stride(2).bias(false)));
            merge_bn->push_back(nn::BatchNorm2d(2 * w[l]));
            up->push_back(double_conv(2 * w[l], w[l]));
        }
        register_module("down", down);
        register_module("upconv", upconv);
        register_module("merge_bn", merge_bn);
        register_module("up", up);
        head = register_module("head", conv(w[0], spec.n_classes, 1, 1, 0, true));
    }

    ModelOutputs forward(const torch::Tensor& images, const std::optional<torch::Tensor>&) override {
        std::vector<torch::Tensor> skips;
        auto x = images;
        for (std::size_t l = 0; l < down->size(); ++l) {
            if (l > 0) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
            x = down->ptr<nn::SequentialImpl>(l)->forward(x);
            skips.push_back(x);
        }
        skips.pop_back();
        for (std::size_t i = 0; i < up->size(); ++i) {
            x = upconv->ptr<nn::ConvTranspose2dImpl>(i)->forward(x);
            x = merge_bn->ptr<nn::BatchNorm2dImpl>(i)->forward(torch::cat({x, skips.back()}, 1));
            skips.pop_back();
            x = up->ptr<nn::SequentialImpl>(i)->forward(x);
        }
        ModelOutputs out;
        out.segmentation = torch::softmax(head(x), 1);
        return out;
    }

    nn::ModuleList down;
    nn::ModuleList upconv;
    nn::ModuleList merge_bn;
    nn::ModuleList up;
    nn::Conv2d head{nullptr};
};

void initialize(nn::Module& module) {
    torch::NoGradGuard guard;
    for (auto& m : module.modules(/*include_self=*/false)) {
        if (auto* c = m->as<nn::Conv2d>()) {
            nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn, torch::kReLU);
            if (c->bias.defined()) c->bias.zero_();
        } else if (auto* t = m->as<nn::ConvTranspose2d>()) {
            nn::init::kaiming_normal_(t->weight, 0.0, torch::kFanIn, torch::kReLU);
            if (t->bias.defined()) t->bias.zero_();
        } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
            bn->weight.fill_(1.0);
            bn->bias.zero_();
        }
    }
}

}  // namespace

Variant parse_variant(const std::string& s) {
    for (const auto& [v, name] : kVariantNames) {
        if (s == name) return v;
    }
    throw std::invalid_argument("unknown model variant '" + s + "'");
}

std::string to_string(Variant v) {
    for (const auto& [value, name] : kVariantNames) {
        if (value == v) return name;
    }
    return "?";
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> all = [] {
        std::vector<Variant> out;
        for (const auto& entry : kVariantNames) out.push_back(entry.v);
        return out;
    }();
    return all;
}

bool requires_semantic(Variant v) {
    switch (v) {
        case Variant::M0:
        case Variant::M6:
        case Variant::M19:
        case Variant::M20:
        case Variant::UNET: return false;
        default: return true;
    }
}

bool has_semantic_decoders(Variant v) {
    return v == Variant::M2 || v == Variant::M3 || v == Variant::M4 || v == Variant::M5;
}

bool is_slim(Variant v) {
    return v == Variant::M18 || v == Variant::M19 || v == Variant::M20 || v == Variant::M21;
}

LossKind default_loss(Variant v) {
    switch (v) {
        case Variant::M2:
        case Variant::M5: return LossKind::MapeSemantic;
        case Variant::M3:
        case Variant::M4: return LossKind::MapePerClass;
        case Variant::UNET: return LossKind::Iou;
        default: return LossKind::Mape;
    }
}

void ModelSpec::validate() const {
    if (width <= 0 || height <= 0 || width % 32 != 0 || height % 32 != 0) {
        throw std::invalid_argument("model input " + std::to_string(width) + "x" + std::to_string(height) +
                                    " is not divisible by 32");
    }
    if (!(width_scale > 0.0 && width_scale <= 1.0)) throw std::invalid_argument("width_scale must lie in (0, 1]");
    if ((requires_semantic(variant) || variant == Variant::UNET) && n_classes < 1) {
        throw std::invalid_argument(to_string(variant) + " needs n_classes >= 1");
    }
    if (n_classes < 0) throw std::invalid_argument("n_classes must be non-negative");
}

int ModelSpec::input_channels() const {
    switch (variant) {
        case Variant::M0:
        case Variant::M20:
        case Variant::UNET: return 3;
        case Variant::M6:
        case Variant::M19: return 1;
        case Variant::M7:
        case Variant::M18: return n_classes;
        default: return 3 + n_classes;
    }
}

KeyValueFile ModelSpec::to_keyvalue() const {
    KeyValueFile kv;
    kv.set("variant", to_string(variant));
    kv.set("width", std::to_string(width));
    kv.set("height", std::to_string(height));
    kv.set("n_classes", std::to_string(n_classes));
    kv.set("width_scale", format_double(width_scale));
    kv.set("seed", std::to_string(seed));
    return kv;
}

ModelSpec ModelSpec::from_keyvalue(const KeyValueFile& kv, const std::string& prefix) {
    ModelSpec s;
    s.variant = parse_variant(kv.get_string(prefix + "variant"));
    s.width = static_cast<int>(kv.get_int(prefix + "width", 64));
    s.height = static_cast<int>(kv.get_int(prefix + "height", 64));
    s.n_classes = static_cast<int>(kv.get_int(prefix + "n_classes", 0));
    s.width_scale = kv.get_double(prefix + "width_scale", 1.0);
    s.seed = static_cast<std::uint64_t>(kv.get_int(prefix + "seed", 0));
    return s;
}

torch::Tensor network_input(Variant v, const torch::Tensor& images, const std::optional<torch::Tensor>& semantic) {
    if (requires_semantic(v) && (!semantic || !semantic->defined())) {
        throw std::invalid_argument(to_string(v) + " requires a semantic label map");
    }
    switch (v) {
        case Variant::M0:
        case Variant::M20:
        case Variant::UNET: return images;
        case Variant::M6:
        case Variant::M19: return sobel_edges(images);
        case Variant::M7:
        case Variant::M18: return semantic_edges(sobel_edges(images), *semantic);
        default: return torch::cat({images, *semantic}, 1);
    }
}

Model build(const ModelSpec& spec) {
    spec.validate();
    torch::manual_seed(spec.seed);
    Model model;
    if (spec.variant == Variant::UNET) {
        auto unet = std::make_shared<UNet>(spec);
        initialize(*unet);
        // Near-uniform softmax at the start; a saturated head never recovers under the IoU loss.
        torch::NoGradGuard guard;
        unet->head->weight.normal_(0.0, 1e-2);
        model = unet;
    } else {
        model = std::make_shared<FcrnNet>(spec);
        initialize(*model);
    }
    return model;
}

std::int64_t parameter_count(const nn::Module& module) {
    std::int64_t n = 0;
    for (const auto& p : module.parameters()) {
        if (p.requires_grad()) n += p.numel();
    }
    return n;
}

void save_checkpoint(const Model& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    model->spec().to_keyvalue().save(dir / "model_spec.txt");
    torch::serialize::OutputArchive archive;
    model->save(archive);
    archive.save_to((dir / "weights.pt").string());
}

Model load_checkpoint(const std::filesystem::path& dir, const torch::Device& device) {
    if (!std::filesystem::exists(dir / "model_spec.txt") || !std::filesystem::exists(dir / "weights.pt")) {
        throw std::runtime_error("not a checkpoint directory: " + dir.string());
    }
    auto model = build(ModelSpec::from_keyvalue(KeyValueFile::load(dir / "model_spec.txt")));
    torch::serialize::InputArchive archive;
    archive.load_from((dir / "weights.pt").string(), device);
    model->load(archive);
    model->to(device);
    return model;
}

torch::Device default_device() {
    const char* env = std::getenv("SEMDEPTH_DEVICE");
    return torch::Device(env && *env ? env : "cpu");
}

Prediction predict(const Model& model, const Sample& s) {
    torch::NoGradGuard guard;
    model->eval();
    const auto device = model->parameters().front().device();
    const auto image = to_tensor(s.image).to(device);
    std::optional<torch::Tensor> sem;
    if (s.semantic) sem = to_tensor(*s.semantic).to(device);
    const auto out = model->forward(image, sem);
    Prediction p;
    if (out.depth.defined()) {
        const auto values = to_hwc(out.depth);
        p.depth = DepthMap::dense(s.image.height(), s.image.width(), values);
    }
    if (out.segmentation) {
        const auto labels = out.segmentation->argmax(1).squeeze(0).to(torch::kCPU, torch::kInt32).contiguous();
        p.segmentation = SemanticLabelMap::one_hot(s.image.height(), s.image.width(),
                                                   static_cast<int>(out.segmentation->size(1)),
                                                   {labels.data_ptr<int>(), static_cast<std::size_t>(labels.numel())});
    }
    return p;
}

}  // namespace semdepth
