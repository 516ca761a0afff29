#include "semdepth/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "semdepth/analysis.hpp"
#include "semdepth/palette.hpp"
#include "semdepth/toy.hpp"

namespace semdepth {

namespace fs = std::filesystem;

namespace {

/// Usage errors detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Size {
    int width = 0;
    int height = 0;
};

Size parse_size(const std::string& s) {
    try {
        std::size_t pos = 0;
        const int w = std::stoi(s, &pos);
        if (pos == s.size()) return {w, w};
        if (s[pos] != 'x') throw UsageError("");
        const auto rest = s.substr(pos + 1);
        const int h = std::stoi(rest, &pos);
        if (pos != rest.size()) throw UsageError("");
        return {w, h};
    } catch (const std::exception&) {
        throw UsageError("--size must be N or WxH (got '" + s + "')");
    }
}

void write_csv(const fs::path& path, const std::string& text, std::vector<fs::path>& paths) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    paths.push_back(path);
}

bool is_builtin(const std::string& name) {
    const auto names = builtin_registry_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

// Frames stored under `root` in the standard layout, in the order given.
DatasetManifest manifest_for(const std::vector<Sample>& samples, const DatasetManifest& like, const fs::path& root) {
    DatasetManifest m = like;
    m.root = root;
    m.frames.clear();
    for (const auto& s : samples) {
        FrameFiles f;
        f.frame_id = s.frame_id;
        const auto dir = root / s.dataset_id;
        f.image = dir / "image" / (s.frame_id + ".png");
        if (s.semantic) f.semantic = dir / "semantic" / (s.frame_id + ".png");
        if (s.depth) f.depth = dir / "depth" / (s.frame_id + ".png");
        m.frames.push_back(std::move(f));
    }
    if (!samples.empty()) m.intrinsics = samples.front().intrinsics;
    return m;
}

CommandResult cmd_toygen(int n, const std::string& size, std::uint64_t seed, const fs::path& out_dir,
                         const std::string& dataset_id, const ToyOptions& options) {
    const auto [w, h] = parse_size(size);
    const auto& registry = common_registry();
    auto samples = generate_toy_dataset(n, w, h, registry, seed, options);
    DatasetManifest m;
    m.dataset_id = dataset_id;
    m.depth_unit = parse_depth_unit("1/256 m");
    m.registry_name = "common";
    m.split_seed = seed;
    m.depth_cap = options.depth_cap;
    for (auto& s : samples) s.dataset_id = dataset_id;
    CommandResult r;
    for (const auto& s : samples) write_sample(out_dir, s, registry, m.depth_unit);
    m = manifest_for(samples, m, out_dir);
    const auto path = out_dir / (dataset_id + ".manifest");
    save_manifest(m, path);
    r.paths = {path, out_dir / dataset_id};
    r.summary = "toygen: " + std::to_string(n) + " frames " + std::to_string(w) + "x" + std::to_string(h) +
                " seed " + std::to_string(seed);
    return r;
}

CommandResult cmd_prepare(const fs::path& manifest_path, const std::string& reference, int tw, int th,
                          const fs::path& out_dir, bool merge) {
    const auto m = load_manifest(manifest_path);
    const auto afov = reference_afov(reference);
    const auto source_registry = m.registry_name;
    const bool do_merge = merge && m.has_semantic() && is_builtin(source_registry) && source_registry != "common";
    std::optional<MergeTable> table;
    if (do_merge) table = merge_table_to_common(source_registry);
    const auto out_registry = do_merge ? common_registry() : registry_by_name(source_registry);

    std::vector<Sample> done;
    std::optional<CropPlan> first;
    for (const auto& f : m.frames) {
        auto s = load_sample(m, f);
        const auto plan = plan_afov_crop(s.intrinsics, afov.horizontal_deg, afov.vertical_deg, {tw, th});
        if (!first) first = plan;
        auto out = apply_crop_resize(s, plan);
        if (table && out.semantic) out.semantic = merge_classes(*out.semantic, *table);
        write_sample(out_dir, out, out_registry, m.depth_unit);
        out.image = ImageTensor();
        out.semantic.reset();
        out.depth.reset();
        done.push_back(std::move(out));
    }
    auto prepared = manifest_for(done, m, out_dir);
    for (auto& f : prepared.frames) {
        const auto dir = out_dir / m.dataset_id;
        if (m.has_semantic()) f.semantic = dir / "semantic" / (f.frame_id + ".png");
        if (m.has_depth()) f.depth = dir / "depth" / (f.frame_id + ".png");
    }
    if (do_merge) prepared.registry_name = "common";
    const auto path = out_dir / (m.dataset_id + ".manifest");
    save_manifest(prepared, path);
    CommandResult r;
    r.paths = {path, out_dir / m.dataset_id};
    char buf[256];
    if (first) {
        std::snprintf(buf, sizeof buf, "prepare %s: %zu frames, crop %dx%d at (%d,%d) -> %dx%d, AFOV %.2f/%.2f deg",
                      m.dataset_id.c_str(), done.size(), first->crop_width, first->crop_height, first->origin_col,
                      first->origin_row, tw, th, first->achieved_h_afov, first->achieved_v_afov);
    } else {
        std::snprintf(buf, sizeof buf, "prepare %s: no frames", m.dataset_id.c_str());
    }
    r.summary = buf;
    return r;
}

std::string metrics_summary(const EvalResult& e) {
    std::string s;
    if (e.depth) {
        for (const auto& name : {"mape", "rmse", "delta1"}) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %s=%.4f", name, e.depth->get(name));
            s += buf;
        }
    }
    if (e.iou) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " mean_iou=%.4f", e.iou->mean_present());
        s += buf;
    }
    return s;
}

CommandResult cmd_train(const std::optional<fs::path>& config, const std::vector<std::string>& sets,
                        const std::optional<fs::path>& out_dir) {
    auto overrides = sets;
    if (out_dir) overrides.push_back("output_dir=" + out_dir->string());
    const auto rc = resolve_run_config(config, overrides);
    const auto result = train(rc);
    CommandResult r;
    r.paths = {rc.output_dir / "runlog.csv", rc.output_dir / "config.txt", result.checkpoint};
    std::int64_t last_step = 0;
    for (const auto& rec : result.log.records()) last_step = std::max(last_step, rec.step);
    r.summary = "train " + to_string(rc.model.variant) + ": " + std::to_string(last_step) + " steps";
    for (const auto& split : result.log.splits()) {
        if (split == "model") continue;
        for (const auto& metric : {"mape", "mean_iou"}) {
            const auto s = result.log.series(split, metric);
            if (s.empty()) continue;
            char buf[96];
            std::snprintf(buf, sizeof buf, " %s/%s=%.4f", split.c_str(), metric, s.back().value);
            r.summary += buf;
        }
    }
    return r;
}

CommandResult cmd_eval(const fs::path& checkpoint, const fs::path& manifest, const std::string& split,
                       const std::optional<fs::path>& out_dir) {
    const auto e = evaluate(checkpoint, manifest, split);
    CommandResult r;
    r.summary = "eval " + manifest.stem().string() + " (" + split + ", " + std::to_string(e.frames) + " frames):" +
                metrics_summary(e);
    if (out_dir) {
        fs::create_directories(*out_dir);
        std::string csv = "metric,value\n";
        for (const auto& [name, v] : e.named_values()) csv += name + "," + format_double(v) + "\n";
        if (e.depth) {
            csv += "n_valid_pixels," + std::to_string(e.depth->n_valid_pixels) + "\n";
            csv += "n_clamped," + std::to_string(e.depth->n_clamped) + "\n";
        }
        write_csv(*out_dir / "eval.csv", csv, r.paths);
    }
    return r;
}

CommandResult cmd_segment(const fs::path& checkpoint, const fs::path& manifest, const fs::path& out_dir) {
    CommandResult r;
    const auto path = generate_segmentation(checkpoint, manifest, out_dir);
    const auto m = load_manifest(path);
    r.paths = {path, m.dataset_dir()};
    r.summary = "segment " + m.dataset_id + ": " + std::to_string(m.frames.size()) + " frames labeled";
    return r;
}

CommandResult cmd_depth_heatmap(const std::vector<fs::path>& manifests, const std::string& norm_name, double range,
                                double bin, const fs::path& out_dir) {
    const auto norm = parse_heatmap_norm(norm_name);
    std::vector<std::pair<std::string, DepthHeatMap>> maps;
    for (const auto& path : manifests) {
        const auto m = load_manifest(path);
        maps.emplace_back(m.dataset_id + "_" + to_string(norm), depth_heatmap(m, norm, range, bin));
    }
    CommandResult r;
    r.paths = emit_report({}, maps, out_dir);
    if (maps.size() > 1) {
        std::string csv = "a,b,distance\n";
        for (std::size_t i = 0; i < maps.size(); ++i) {
            for (std::size_t j = i + 1; j < maps.size(); ++j) {
                csv += maps[i].first + "," + maps[j].first + "," +
                       format_double(heatmap_distance(maps[i].second, maps[j].second)) + "\n";
            }
        }
        write_csv(out_dir / "heatmap_distances.csv", csv, r.paths);
    }
    r.summary = "depth heat maps (" + to_string(norm) + "): " + std::to_string(maps.size()) + " datasets";
    return r;
}

CommandResult cmd_accuracy_heatmap(const fs::path& checkpoint, const fs::path& manifest_path, const std::string& split,
                                   const fs::path& out_dir) {
    const auto model = load_checkpoint(checkpoint, default_device());
    const auto m = load_manifest(manifest_path);
    if (!m.has_depth()) throw std::invalid_argument("manifest lacks depth");
    AccuracyHistogram h(default_range_edges(), ErrorBins{});
    std::size_t frames = 0;
    for (const auto& f : select_frames(m, split)) {
        const auto s = load_sample(m, f);
        const auto p = predict(model, s);
        if (!p.depth) throw std::invalid_argument(to_string(model->spec().variant) + " predicts no depth");
        h.add(*p.depth, *s.depth);
        ++frames;
    }
    fs::create_directories(out_dir);
    CommandResult r;
    r.paths = write_heatmap(h.normalized(), out_dir / ("accuracy_" + m.dataset_id));
    r.summary = "accuracy heat map " + m.dataset_id + " (" + split + ", " + std::to_string(frames) + " frames)";
    return r;
}

CommandResult cmd_compare(const std::vector<std::string>& logs, const std::vector<std::string>& baselines,
                          const std::string& split, int from, int to, const fs::path& out_dir) {
    std::vector<NamedRun> runs;
    std::set<std::string> names;
    for (const auto& item : logs) {
        const auto eq = item.find('=');
        std::string name;
        fs::path path;
        if (eq == std::string::npos) {
            path = item;
            const auto dir = path.parent_path().filename().string();
            name = dir.empty() ? path.stem().string() : dir;
        } else {
            name = item.substr(0, eq);
            path = item.substr(eq + 1);
        }
        if (!names.insert(name).second) throw UsageError("run name '" + name + "' given twice");
        runs.push_back({name, RunLog::load(path)});
    }
    ReportOptions options;
    options.split = split;
    options.from_eval = from;
    options.to_eval = to;
    options.baselines = baselines;
    CommandResult r;
    r.paths = emit_report(runs, {}, out_dir, options);
    r.summary = "compare: " + std::to_string(runs.size()) + " runs on " + split + ", evaluations " +
                std::to_string(from) + ".." + (to == (1 << 30) ? std::string("end") : std::to_string(to));
    return r;
}

}  // namespace

RunConfig resolve_run_config(const std::optional<fs::path>& config_file, const std::vector<std::string>& overrides) {
    KeyValueFile kv;
    if (config_file) {
        kv = KeyValueFile::load(*config_file);
        const auto base = config_file->parent_path();
        for (const auto& key : {"data.train", "data.eval"}) {
            if (!kv.contains(key)) continue;
            std::string joined;
            for (const auto& item : kv.get_list(key)) {
                const fs::path p(item);
                joined += (joined.empty() ? "" : ",") + (p.is_absolute() ? p : base / p).string();
            }
            kv.set(key, joined);
        }
    }
    KeyValueFile flags;
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not key=value");
        const auto key = item.substr(0, eq);
        if (flags.contains(key)) throw ConfigError("key '" + key + "' overridden twice");
        flags.set(key, item.substr(eq + 1));
    }
    kv.merge(flags);
    return RunConfig::from_keyvalue(kv);
}

CommandResult run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"semdepth: depth estimation with semantic segmentation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::function<CommandResult()> action;

    // prepare
    fs::path p_manifest, p_out;
    std::string p_ref = "lyft";
    int p_w = 1216, p_h = 352;
    bool p_no_merge = false;
    auto* prepare = app.add_subcommand("prepare", "crop to the reference AFOV, resize, merge classes");
    prepare->add_option("--manifest", p_manifest, "dataset manifest")->required();
    prepare->add_option("--target-afov-ref", p_ref, "reference camera")->capture_default_str();
    prepare->add_option("--width", p_w, "output width")->capture_default_str();
    prepare->add_option("--height", p_h, "output height")->capture_default_str();
    prepare->add_flag("--no-merge", p_no_merge, "keep the dataset palette");
    prepare->add_option("--out", p_out, "output root")->required();
    prepare->callback([&] { action = [&] { return cmd_prepare(p_manifest, p_ref, p_w, p_h, p_out, !p_no_merge); }; });

    // toygen
    int t_n = 0;
    std::string t_size;
    std::uint64_t t_seed = 0;
    fs::path t_out;
    std::string t_id = "toy";
    ToyOptions t_opts;
    auto* toygen = app.add_subcommand("toygen", "render a synthetic toy dataset");
    toygen->add_option("--n", t_n, "frames")->required();
    toygen->add_option("--size", t_size, "N or WxH, multiples of 32")->required();
    toygen->add_option("--seed", t_seed, "random seed")->capture_default_str();
    toygen->add_option("--out", t_out, "output root")->required();
    toygen->add_option("--dataset-id", t_id, "dataset id")->capture_default_str();
    toygen->add_option("--depth-cap", t_opts.depth_cap, "meters")->capture_default_str();
    toygen->add_option("--illumination-jitter", t_opts.illumination_jitter)->capture_default_str();
    toygen->add_option("--noise", t_opts.noise)->capture_default_str();
    toygen->add_flag("--random-object-colors", t_opts.random_object_colors, "per-object random base color");
    toygen->callback([&] { action = [&] { return cmd_toygen(t_n, t_size, t_seed, t_out, t_id, t_opts); }; });

    // train
    std::optional<fs::path> r_config, r_out;
    std::vector<std::string> r_sets;
    auto* trainc = app.add_subcommand("train", "train a model from a run config");
    trainc->add_option("--config", r_config, "run config file");
    trainc->add_option("--set", r_sets, "key=value override (repeatable)");
    trainc->add_option("--out", r_out, "output directory (output_dir)");
    trainc->callback([&] { action = [&] { return cmd_train(r_config, r_sets, r_out); }; });

    // eval
    fs::path e_ckpt, e_manifest;
    std::string e_split = "all";
    std::optional<fs::path> e_out;
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
    evalc->add_option("--checkpoint", e_ckpt)->required();
    evalc->add_option("--manifest", e_manifest)->required();
    evalc->add_option("--split", e_split, "train, test or all")->capture_default_str();
    evalc->add_option("--out", e_out, "write eval.csv here");
    evalc->callback([&] { action = [&] { return cmd_eval(e_ckpt, e_manifest, e_split, e_out); }; });

    // segment
    fs::path s_ckpt, s_manifest, s_out;
    auto* segment = app.add_subcommand("segment", "label a dataset with a UNET checkpoint");
    segment->add_option("--checkpoint", s_ckpt)->required();
    segment->add_option("--manifest", s_manifest)->required();
    segment->add_option("--out", s_out, "output root")->required();
    segment->callback([&] { action = [&] { return cmd_segment(s_ckpt, s_manifest, s_out); }; });

    // analyze
    auto* analyze = app.add_subcommand("analyze", "dataset and prediction statistics");
    analyze->require_subcommand(1);
    std::vector<fs::path> a_manifests;
    std::string a_norm = "global";
    double a_range = 100.0, a_bin = 0.2;
    fs::path a_out;
    auto* dh = analyze->add_subcommand("depth-heatmap", "row-wise depth distribution");
    dh->add_option("--manifest", a_manifests, "one or more manifests")->required();
    dh->add_option("--norm", a_norm, "global or per_row")->capture_default_str();
    dh->add_option("--range", a_range, "meters")->capture_default_str();
    dh->add_option("--bin", a_bin, "meters")->capture_default_str();
    dh->add_option("--out", a_out)->required();
    dh->callback([&] { action = [&] { return cmd_depth_heatmap(a_manifests, a_norm, a_range, a_bin, a_out); }; });
    fs::path ah_ckpt, ah_manifest, ah_out;
    std::string ah_split = "test";
    auto* ah = analyze->add_subcommand("accuracy-heatmap", "prediction error per distance range");
    ah->add_option("--checkpoint", ah_ckpt)->required();
    ah->add_option("--manifest", ah_manifest)->required();
    ah->add_option("--split", ah_split)->capture_default_str();
    ah->add_option("--out", ah_out)->required();
    ah->callback([&] { action = [&] { return cmd_accuracy_heatmap(ah_ckpt, ah_manifest, ah_split, ah_out); }; });

    // compare
    std::vector<std::string> c_logs, c_baselines;
    std::string c_split = "test";
    int c_from = 1, c_to = 1 << 30;
    fs::path c_out;
    auto* compare = app.add_subcommand("compare", "windowed averages and relative superiority");
    compare->add_option("--logs", c_logs, "runlog.csv paths, optionally name=path")->required();
    compare->add_option("--baseline", c_baselines, "run compared against (repeatable)");
    compare->add_option("--split", c_split)->capture_default_str();
    compare->add_option("--from", c_from, "first evaluation (1-based)")->capture_default_str();
    compare->add_option("--to", c_to, "last evaluation");
    compare->add_option("--out", c_out)->required();
    compare->callback([&] { action = [&] { return cmd_compare(c_logs, c_baselines, c_split, c_from, c_to, c_out); }; });

    CommandResult result;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        result.exit_code = code == 0 ? 0 : 2;
        return result;
    }
    try {
        result = action();
        result.exit_code = 0;
        out << result.summary << '\n';
        for (const auto& p : result.paths) out << p.string() << '\n';
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        result = {2, {}, {}};
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        result = {2, {}, {}};
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        result = {1, {}, {}};
    }
    return result;
}

}  // namespace semdepth
