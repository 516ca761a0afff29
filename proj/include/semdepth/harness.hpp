#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semdepth/adapt.hpp"
#include "semdepth/keyvalue.hpp"
#include "semdepth/losses.hpp"
#include "semdepth/metrics.hpp"
#include "semdepth/models.hpp"
#include "semdepth/runlog.hpp"

namespace semdepth {

struct RunConfig {
    ModelSpec model;
    std::vector<std::filesystem::path> train_manifests;
    std::vector<std::filesystem::path> eval_manifests;
    std::string train_split = "train";
    std::string eval_split = "test";
    int batch_size = 2;
    double learning_rate = 1e-3;
    std::int64_t max_steps = 0;  ///< 0: run `epochs` full epochs
    int epochs = 1;
    std::int64_t eval_every = 0;  ///< steps between evaluations; 0 means once per epoch
    std::optional<LossKind> loss;  ///< default follows the variant
    std::uint64_t seed = 0;
    bool eval_train = true;
    std::filesystem::path output_dir = "run";

    /// Every key the config file and --set flags may use.
    [[nodiscard]] static const std::set<std::string>& known_keys();
    /// Throws ConfigError on unknown keys or malformed values.
    [[nodiscard]] static RunConfig from_keyvalue(const KeyValueFile& kv);
    [[nodiscard]] KeyValueFile to_keyvalue() const;
    [[nodiscard]] LossKind resolved_loss() const { return loss.value_or(default_loss(model.variant)); }
};

struct EvalSet {
    std::string split;  ///< name in the run log ("test", "test:<dataset>")
    std::vector<Sample> samples;
};

struct TrainResult {
    RunLog log;
    std::filesystem::path checkpoint;
    Model model;
};

/// Trains on in-memory samples; writes runlog.csv and checkpoint/ under config.output_dir.
[[nodiscard]] TrainResult train(const RunConfig& config, const std::vector<Sample>& train_samples,
                                const std::vector<EvalSet>& eval_sets);

/// Loads the manifests named in the config (filling model.n_classes from the registry when 0).
[[nodiscard]] TrainResult train(RunConfig config);

struct EvalResult {
    std::optional<MetricReport> depth;
    std::optional<IouResult> iou;
    std::size_t frames = 0;

    /// metric name → value pairs in report order (depth metrics, or mean_iou and iou_<c>).
    [[nodiscard]] std::vector<std::pair<std::string, double>> named_values() const;
};

/// Pixel-weighted metrics over `samples` in eval mode. Throws "manifest lacks depth" for
/// depth models on samples without depth, and likewise for missing semantic labels.
[[nodiscard]] EvalResult evaluate(const Model& model, const std::vector<Sample>& samples, int batch_size = 8);
[[nodiscard]] EvalResult evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                                  const std::string& split = "all");

/// Copies every frame of the manifest under `out_root` with semantic maps predicted by a
/// segmentation checkpoint, and writes `<out_root>/<dataset_id>.manifest`. Returns its path.
std::filesystem::path generate_segmentation(const std::filesystem::path& checkpoint,
                                            const std::filesystem::path& manifest,
                                            const std::filesystem::path& out_root);

/// Stacked tensors of a batch.
struct Batch {
    torch::Tensor images;
    std::optional<torch::Tensor> semantic;
    std::optional<torch::Tensor> depth;
    std::optional<torch::Tensor> mask;
};

[[nodiscard]] Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                               const torch::Device& device);

/// Training objective of `kind` for one batch.
[[nodiscard]] torch::Tensor compute_loss(LossKind kind, const ModelOutputs& out, const Batch& batch);

}  // namespace semdepth
