#include "semdepth/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "semdepth/blocks.hpp"
#include "semdepth/palette.hpp"

namespace semdepth {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> as_paths(const std::vector<std::string>& items) { return {items.begin(), items.end()}; }

std::string join_paths(const std::vector<fs::path>& paths) {
    std::string out;
    for (const auto& p : paths) out += (out.empty() ? "" : ",") + p.string();
    return out;
}

void check_samples(const ModelSpec& spec, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("no samples to process");
    const bool seg = spec.variant == Variant::UNET;
    for (const auto& s : samples) {
        if (s.image.height() != spec.height || s.image.width() != spec.width) {
            throw std::invalid_argument("frame " + s.frame_id + " is " + std::to_string(s.image.width()) + "x" +
                                        std::to_string(s.image.height()) + " but the model expects " +
                                        std::to_string(spec.width) + "x" + std::to_string(spec.height));
        }
        if (!seg && !s.depth) throw std::invalid_argument("manifest lacks depth");
        if (seg && !s.semantic) throw std::invalid_argument("manifest lacks semantic labels");
        if (requires_semantic(spec.variant) && !s.semantic) {
            throw std::invalid_argument(to_string(spec.variant) + " requires semantic labels; manifest lacks semantic");
        }
        if (s.semantic && (requires_semantic(spec.variant) || seg) && s.semantic->channels() != spec.n_classes) {
            throw std::invalid_argument("frame " + s.frame_id + " has " + std::to_string(s.semantic->channels()) +
                                        " classes but the model expects " + std::to_string(spec.n_classes));
        }
    }
}

torch::Tensor select(const torch::Tensor& t, const torch::Tensor& idx) { return t.index_select(0, idx); }

Batch select(const Batch& all, const std::vector<std::size_t>& indices) {
    std::vector<std::int64_t> ids(indices.begin(), indices.end());
    const auto idx = torch::tensor(ids, torch::kInt64).to(all.images.device());
    Batch b;
    b.images = select(all.images, idx);
    if (all.semantic) b.semantic = select(*all.semantic, idx);
    if (all.depth) b.depth = select(*all.depth, idx);
    if (all.mask) b.mask = select(*all.mask, idx);
    return b;
}

std::vector<EvalSet> load_eval_sets(const std::vector<fs::path>& manifests, const std::string& split) {
    std::vector<EvalSet> out;
    for (const auto& path : manifests) {
        const auto m = load_manifest(path);
        out.push_back({manifests.size() == 1 ? "test" : "test:" + m.dataset_id,
                       load_samples(m, select_frames(m, split))});
    }
    return out;
}

}  // namespace

const std::set<std::string>& RunConfig::known_keys() {
    static const std::set<std::string> keys = {
        "model.variant",   "model.width",      "model.height",    "model.n_classes", "model.width_scale",
        "model.seed",      "data.train",       "data.eval",       "data.train_split", "data.eval_split",
        "train.batch_size", "train.lr",        "train.max_steps", "train.epochs",    "train.eval_every",
        "train.loss",      "train.seed",       "train.eval_train", "output_dir",
    };
    return keys;
}

RunConfig RunConfig::from_keyvalue(const KeyValueFile& kv) {
    kv.require_known(known_keys());
    RunConfig c;
    try {
        c.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", 0));
        c.model = ModelSpec::from_keyvalue(kv, "model.");
        if (!kv.contains("model.seed")) c.model.seed = c.seed;
        c.train_manifests = as_paths(kv.get_list("data.train"));
        c.eval_manifests = as_paths(kv.get_list("data.eval"));
        c.train_split = kv.get_string("data.train_split", "train");
        c.eval_split = kv.get_string("data.eval_split", "test");
        c.batch_size = static_cast<int>(kv.get_int("train.batch_size", 2));
        c.learning_rate = kv.get_double("train.lr", 1e-3);
        c.max_steps = kv.get_int("train.max_steps", 0);
        c.epochs = static_cast<int>(kv.get_int("train.epochs", 1));
        const auto every = kv.get_string("train.eval_every", "epoch");
        c.eval_every = every == "epoch" ? 0 : kv.get_int("train.eval_every");
        if (kv.contains("train.loss")) c.loss = parse_loss_kind(kv.get_string("train.loss"));
        const auto eval_train = kv.get_string("train.eval_train", "true");
        if (eval_train != "true" && eval_train != "false") throw ConfigError("train.eval_train must be true or false");
        c.eval_train = eval_train == "true";
        c.output_dir = kv.get_string("output_dir", "run");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
    if (!(c.learning_rate > 0)) throw ConfigError("train.lr must be positive");
    if (c.max_steps < 0 || c.epochs < 1) throw ConfigError("train.max_steps must be >= 0 and train.epochs >= 1");
    if (c.eval_every < 0) throw ConfigError("train.eval_every must be 'epoch' or a positive step count");
    return c;
}

KeyValueFile RunConfig::to_keyvalue() const {
    KeyValueFile kv;
    const auto model_kv = model.to_keyvalue();
    for (const auto& [k, v] : model_kv.values()) kv.set("model." + k, v);
    kv.set("data.train", join_paths(train_manifests));
    kv.set("data.eval", join_paths(eval_manifests));
    kv.set("data.train_split", train_split);
    kv.set("data.eval_split", eval_split);
    kv.set("train.batch_size", std::to_string(batch_size));
    kv.set("train.lr", format_double(learning_rate));
    kv.set("train.max_steps", std::to_string(max_steps));
    kv.set("train.epochs", std::to_string(epochs));
    kv.set("train.eval_every", eval_every == 0 ? "epoch" : std::to_string(eval_every));
    kv.set("train.loss", to_string(resolved_loss()));
    kv.set("train.seed", std::to_string(seed));
    kv.set("train.eval_train", eval_train ? "true" : "false");
    kv.set("output_dir", output_dir.string());
    return kv;
}

Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                 const torch::Device& device) {
    std::vector<torch::Tensor> images, semantic, depth, mask;
    const bool all_sem = std::all_of(indices.begin(), indices.end(), [&](auto i) { return samples[i].semantic.has_value(); });
    const bool all_depth = std::all_of(indices.begin(), indices.end(), [&](auto i) { return samples[i].depth.has_value(); });
    for (auto i : indices) {
        const auto& s = samples.at(i);
        images.push_back(to_tensor(s.image));
        if (all_sem) semantic.push_back(to_tensor(*s.semantic));
        if (all_depth) {
            const auto& d = *s.depth;
            const auto h = d.height();
            const auto w = d.width();
            depth.push_back(torch::from_blob(const_cast<float*>(d.values().data()), {1, 1, h, w}, torch::kFloat32).clone());
            mask.push_back(
                torch::from_blob(const_cast<std::uint8_t*>(d.valid_mask().data()), {1, 1, h, w}, torch::kUInt8)
                    .to(torch::kBool));
        }
    }
    Batch b;
    b.images = torch::cat(images, 0).to(device);
    if (all_sem) b.semantic = torch::cat(semantic, 0).to(device);
    if (all_depth) {
        b.depth = torch::cat(depth, 0).to(device);
        b.mask = torch::cat(mask, 0).to(device);
    }
    return b;
}

torch::Tensor compute_loss(LossKind kind, const ModelOutputs& out, const Batch& batch) {
    if (kind == LossKind::Iou) {
        if (!out.segmentation || !batch.semantic) throw std::invalid_argument("iou loss needs a segmentation output");
        return iou_loss(*out.segmentation, *batch.semantic);
    }
    if (!out.depth.defined() || !batch.depth) throw std::invalid_argument("depth loss needs depth output and labels");
    auto loss = mape_loss(out.depth, *batch.depth, *batch.mask);
    if (kind == LossKind::Mape) return loss;
    if (!out.semantic_depth || !batch.semantic) {
        throw std::invalid_argument(to_string(kind) + " loss needs semantic decoders and labels");
    }
    if (kind == LossKind::MapeSemantic) {
        return loss + semantic_depth_loss(*out.semantic_depth, *batch.depth, *batch.mask, *batch.semantic);
    }
    return loss + per_class_depth_loss(*out.semantic_depth, *batch.depth, *batch.mask, *batch.semantic);
}

std::vector<std::pair<std::string, double>> EvalResult::named_values() const {
    std::vector<std::pair<std::string, double>> out;
    if (depth) {
        const auto values = depth->values();
        for (std::size_t i = 0; i < values.size(); ++i) out.emplace_back(MetricReport::names()[i], values[i]);
    }
    if (iou) {
        out.emplace_back("mean_iou", iou->mean_present());
        for (std::size_t c = 0; c < iou->per_class.size(); ++c) {
            out.emplace_back("iou_" + std::to_string(c), iou->per_class[c]);
        }
    }
    return out;
}

EvalResult evaluate(const Model& model, const std::vector<Sample>& samples, int batch_size) {
    const auto& spec = model->spec();
    check_samples(spec, samples);
    const bool was_training = model->is_training();
    model->eval();
    torch::NoGradGuard guard;
    const auto device = model->parameters().front().device();

    DepthMetricAccumulator depth_acc;
    IouAccumulator iou_acc(std::max(1, spec.n_classes));
    const bool seg = spec.variant == Variant::UNET;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        std::vector<std::size_t> idx(std::min<std::size_t>(batch_size, samples.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto batch = make_batch(samples, idx, device);
        const auto out = model->forward(batch.images, batch.semantic);
        if (seg) {
            const auto p = out.segmentation->argmax(1).to(torch::kCPU, torch::kInt32).contiguous();
            const auto g = batch.semantic->argmax(1).to(torch::kCPU, torch::kInt32).contiguous();
            iou_acc.add_labels({p.data_ptr<int>(), static_cast<std::size_t>(p.numel())},
                               {g.data_ptr<int>(), static_cast<std::size_t>(g.numel())});
            continue;
        }
        const auto pred = out.depth.to(torch::kCPU, torch::kFloat32).contiguous();
        const float* y = pred.data_ptr<float>();
        const auto plane = static_cast<std::size_t>(spec.height) * spec.width;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const auto& gt = *samples[idx[b]].depth;
            const auto values = gt.values();
            const auto valid = gt.valid_mask();
            for (std::size_t i = 0; i < plane; ++i) {
                if (valid[i]) depth_acc.add_pixel(y[b * plane + i], values[i]);
            }
        }
    }
    if (was_training) model->train();
    EvalResult r;
    r.frames = samples.size();
    if (seg) {
        r.iou = iou_acc.result();
    } else {
        r.depth = depth_acc.report();
    }
    return r;
}

EvalResult evaluate(const fs::path& checkpoint, const fs::path& manifest, const std::string& split) {
    const auto model = load_checkpoint(checkpoint, default_device());
    const auto m = load_manifest(manifest);
    if (model->spec().variant != Variant::UNET && !m.has_depth()) throw std::invalid_argument("manifest lacks depth");
    return evaluate(model, load_samples(m, select_frames(m, split)));
}

TrainResult train(const RunConfig& config, const std::vector<Sample>& train_samples,
                  const std::vector<EvalSet>& eval_sets) {
    const auto& spec = config.model;
    check_samples(spec, train_samples);
    for (const auto& e : eval_sets) check_samples(spec, e.samples);
    const auto n = train_samples.size();
    const auto steps_per_epoch = static_cast<std::int64_t>(n) / config.batch_size;
    if (steps_per_epoch < 1) {
        throw std::invalid_argument("batch size " + std::to_string(config.batch_size) + " exceeds the " +
                                    std::to_string(n) + " training frames");
    }
    const std::int64_t total = config.max_steps > 0 ? config.max_steps : steps_per_epoch * config.epochs;
    const std::int64_t every = config.eval_every > 0 ? config.eval_every : steps_per_epoch;
    const auto kind = config.resolved_loss();

    const auto device = default_device();
    auto model = build(spec);
    model->to(device);
    model->train();
    torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate));

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto data = make_batch(train_samples, all, device);

    fs::create_directories(config.output_dir);
    const auto log_path = config.output_dir / "runlog.csv";
    const auto ckpt = config.output_dir / "checkpoint";
    std::ofstream log_file(log_path);
    if (!log_file) throw std::runtime_error("cannot write " + log_path.string());
    log_file << RunLog::kHeader << '\n';
    config.to_keyvalue().save(config.output_dir / "config.txt");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    TrainResult result;
    auto record = [&](std::int64_t step, const std::string& split, const std::string& metric, double value) {
        RunRecord r{step, split, metric, value, elapsed()};
        log_file << RunLog::csv_line(r) << '\n';
        result.log.append(std::move(r));
    };
    record(0, "model", "trainable_params", static_cast<double>(parameter_count(*model)));

    bool have_checkpoint = false;
    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    std::vector<std::size_t> perm;
    for (std::int64_t step = 1; step <= total; ++step) {
        const auto epoch = (step - 1) / steps_per_epoch;
        const auto pos = (step - 1) % steps_per_epoch;
        if (pos == 0) perm = seeded_permutation(n, config.seed ^ static_cast<std::uint64_t>(epoch));
        const std::vector<std::size_t> idx(perm.begin() + pos * config.batch_size,
                                           perm.begin() + (pos + 1) * config.batch_size);
        const auto batch = select(data, idx);
        const auto out = model->forward(batch.images, batch.semantic);
        auto loss = compute_loss(kind, out, batch);
        const double value = loss.item<double>();
        if (!std::isfinite(value)) {
            throw std::runtime_error("non-finite loss at step " + std::to_string(step) + "; last checkpoint: " +
                                     (have_checkpoint ? ckpt.string() : std::string("none")));
        }
        optimizer.zero_grad();
        loss.backward();
        optimizer.step();
        loss_sum += value;
        ++loss_count;

        if (step % every != 0 && step != total) continue;
        record(step, "train", "loss", loss_sum / static_cast<double>(loss_count));
        loss_sum = 0.0;
        loss_count = 0;
        if (config.eval_train) {
            for (const auto& [name, v] : evaluate(model, train_samples).named_values()) record(step, "train", name, v);
        }
        for (const auto& e : eval_sets) {
            for (const auto& [name, v] : evaluate(model, e.samples).named_values()) record(step, e.split, name, v);
        }
        log_file.flush();
        save_checkpoint(model, ckpt);
        have_checkpoint = true;
    }
    result.checkpoint = ckpt;
    result.model = model;
    return result;
}

TrainResult train(RunConfig config) {
    if (config.train_manifests.empty()) throw ConfigError("data.train names no manifest");
    std::vector<Sample> train_samples;
    for (const auto& path : config.train_manifests) {
        const auto m = load_manifest(path);
        if (config.model.n_classes == 0 && (requires_semantic(config.model.variant) ||
                                            config.model.variant == Variant::UNET)) {
            config.model.n_classes = static_cast<int>(registry_by_name(m.registry_name).size());
        }
        auto part = load_samples(m, select_frames(m, config.train_split));
        train_samples.insert(train_samples.end(), std::make_move_iterator(part.begin()),
                             std::make_move_iterator(part.end()));
    }
    return train(config, train_samples, load_eval_sets(config.eval_manifests, config.eval_split));
}

fs::path generate_segmentation(const fs::path& checkpoint, const fs::path& manifest_path, const fs::path& out_root) {
    const auto model = load_checkpoint(checkpoint, default_device());
    if (model->spec().variant != Variant::UNET) throw std::invalid_argument("segment needs a UNET checkpoint");
    auto manifest = load_manifest(manifest_path);
    const auto registry = registry_by_name(manifest.registry_name);
    if (static_cast<int>(registry.size()) != model->spec().n_classes) {
        throw std::invalid_argument("registry '" + registry.name() + "' has " + std::to_string(registry.size()) +
                                    " classes but the checkpoint predicts " + std::to_string(model->spec().n_classes));
    }
    for (const auto& frame : manifest.frames) {
        auto s = load_sample(manifest, frame);
        s.semantic = predict(model, s).segmentation;
        write_sample(out_root, s, registry, manifest.depth_unit);
    }
    DatasetManifest out = manifest;
    out.root = out_root;
    for (auto& f : out.frames) {
        const auto dir = out_root / out.dataset_id;
        f.image = dir / "image" / (f.frame_id + ".png");
        f.semantic = dir / "semantic" / (f.frame_id + ".png");
        if (f.depth) f.depth = dir / "depth" / (f.frame_id + ".png");
    }
    const auto path = out_root / (out.dataset_id + ".manifest");
    save_manifest(out, path);
    return path;
}

}  // namespace semdepth
