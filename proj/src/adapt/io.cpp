#include <algorithm>
#include <cmath>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "semdepth/adapt.hpp"
#include "semdepth/keyvalue.hpp"
#include "semdepth/palette.hpp"

namespace semdepth {

namespace fs = std::filesystem;

namespace {

const char* const kImageDir = "image";
const char* const kSemanticDir = "semantic";
const char* const kDepthDir = "depth";

const std::set<std::string> kManifestKeys = {"dataset_id",     "root",      "focal_length_px", "depth_unit",
                                             "registry_name",  "split_seed", "train_fraction", "width_px",
                                             "height_px",      "depth_cap", "frames"};

RgbImage read_rgb(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot read image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return {rgb.rows, rgb.cols, std::vector<std::uint8_t>(rgb.data, rgb.data + rgb.total() * 3)};
}

void write_rgb(const fs::path& path, const RgbImage& img) {
    cv::Mat rgb(img.height(), img.width(), CV_8UC3, const_cast<std::uint8_t*>(img.data().data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write " + path.string());
}

Grid<std::uint16_t> read_depth16(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_ANYDEPTH);
    if (m.empty()) throw std::runtime_error("cannot read depth " + path.string());
    if (m.type() != CV_16UC1) throw std::runtime_error(path.string() + ": depth must be 16-bit single channel");
    return {m.rows, m.cols, 1, std::vector<std::uint16_t>(m.ptr<std::uint16_t>(), m.ptr<std::uint16_t>() + m.total())};
}

std::optional<fs::path> existing(const fs::path& p) {
    return fs::exists(p) ? std::optional<fs::path>{p} : std::nullopt;
}

}  // namespace

bool DatasetManifest::has_depth() const {
    return !frames.empty() && std::all_of(frames.begin(), frames.end(), [](const auto& f) { return f.depth.has_value(); });
}

bool DatasetManifest::has_semantic() const {
    return !frames.empty() &&
           std::all_of(frames.begin(), frames.end(), [](const auto& f) { return f.semantic.has_value(); });
}

DatasetManifest load_manifest(const fs::path& path) {
    const auto kv = KeyValueFile::load(path);
    kv.require_known(kManifestKeys);
    DatasetManifest m;
    m.dataset_id = kv.get_string("dataset_id");
    const fs::path root = kv.get_string("root", ".");
    m.root = root.is_absolute() ? root : (path.parent_path() / root).lexically_normal();
    m.intrinsics.focal_length_px = kv.get_double("focal_length_px");
    m.depth_unit = parse_depth_unit(kv.get_string("depth_unit", "1/256 m"));
    m.registry_name = kv.get_string("registry_name", "common");
    m.split_seed = static_cast<std::uint64_t>(kv.get_int("split_seed", 0));
    m.train_fraction = kv.get_double("train_fraction", 0.75);
    m.depth_cap = kv.get_double("depth_cap", kDefaultDepthCap);

    std::vector<std::string> ids = kv.get_list("frames");
    const fs::path image_dir = m.dataset_dir() / kImageDir;
    if (ids.empty()) {
        if (!fs::is_directory(image_dir)) throw std::runtime_error("missing files:\n  " + image_dir.string());
        for (const auto& entry : fs::directory_iterator(image_dir)) {
            if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
        }
        std::sort(ids.begin(), ids.end());
    }
    std::vector<std::string> missing;
    for (const auto& id : ids) {
        FrameFiles f;
        f.frame_id = id;
        f.image = image_dir / (id + ".png");
        if (!fs::exists(f.image)) missing.push_back(f.image.string());
        f.semantic = existing(m.dataset_dir() / kSemanticDir / (id + ".png"));
        f.depth = existing(m.dataset_dir() / kDepthDir / (id + ".png"));
        m.frames.push_back(std::move(f));
    }
    if (!missing.empty()) {
        std::string msg = "missing files:";
        for (const auto& p : missing) msg += "\n  " + p;
        throw std::runtime_error(msg);
    }
    if (m.frames.empty()) throw std::runtime_error("manifest " + path.string() + " lists no frames");

    if (kv.contains("width_px") && kv.contains("height_px")) {
        m.intrinsics.width_px = static_cast<int>(kv.get_int("width_px"));
        m.intrinsics.height_px = static_cast<int>(kv.get_int("height_px"));
    } else {
        const cv::Mat probe = cv::imread(m.frames.front().image.string(), cv::IMREAD_UNCHANGED);
        if (probe.empty()) throw std::runtime_error("cannot read image " + m.frames.front().image.string());
        m.intrinsics.width_px = probe.cols;
        m.intrinsics.height_px = probe.rows;
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    KeyValueFile kv;
    kv.set("dataset_id", manifest.dataset_id);
    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    const auto rel = fs::proximate(manifest.root, dir);
    kv.set("root", rel.empty() ? "." : rel.string());
    kv.set("focal_length_px", format_double(manifest.intrinsics.focal_length_px));
    kv.set("width_px", std::to_string(manifest.intrinsics.width_px));
    kv.set("height_px", std::to_string(manifest.intrinsics.height_px));
    kv.set("depth_unit", manifest.depth_unit.descriptor);
    kv.set("registry_name", manifest.registry_name);
    kv.set("split_seed", std::to_string(manifest.split_seed));
    kv.set("train_fraction", format_double(manifest.train_fraction));
    kv.set("depth_cap", format_double(manifest.depth_cap));
    std::string ids;
    for (const auto& f : manifest.frames) ids += (ids.empty() ? "" : ",") + f.frame_id;
    kv.set("frames", ids);
    kv.save(path);
}

std::vector<FrameFiles> select_frames(const DatasetManifest& manifest, const std::string& which) {
    if (which == "all") return manifest.frames;
    if (which != "train" && which != "test") {
        throw std::invalid_argument("split must be train, test or all (got '" + which + "')");
    }
    auto split = split_dataset(manifest.frames, manifest.train_fraction, manifest.split_seed);
    return which == "train" ? split.train : split.test;
}

Sample load_sample(const DatasetManifest& manifest, const FrameFiles& frame) {
    RawSample raw;
    raw.image = read_rgb(frame.image);
    raw.intrinsics = {manifest.intrinsics.focal_length_px, raw.image.width(), raw.image.height()};
    raw.dataset_id = manifest.dataset_id;
    raw.frame_id = frame.frame_id;
    if (frame.semantic) raw.label = read_rgb(*frame.semantic);
    if (frame.depth) raw.depth = read_depth16(*frame.depth);
    std::optional<ClassRegistry> registry;
    if (raw.label) registry = registry_by_name(manifest.registry_name);
    return normalize_and_convert(raw, manifest.depth_unit, registry ? &*registry : nullptr, manifest.depth_cap).sample;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, const std::vector<FrameFiles>& frames) {
    std::vector<Sample> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(load_sample(manifest, f));
    return out;
}

void write_sample(const fs::path& root, const Sample& s, const ClassRegistry& registry, const DepthUnit& unit) {
    const fs::path dir = root / s.dataset_id;
    fs::create_directories(dir / kImageDir);
    const auto file = s.frame_id + ".png";

    RgbImage img(s.image.height(), s.image.width());
    auto dst = img.data();
    auto src = s.image.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0F, 1.0F) * 255.0F));
    }
    write_rgb(dir / kImageDir / file, img);

    if (s.semantic) {
        fs::create_directories(dir / kSemanticDir);
        write_rgb(dir / kSemanticDir / file, onehot_to_rgb(*s.semantic, registry));
    }
    if (s.depth) {
        fs::create_directories(dir / kDepthDir);
        const auto& d = *s.depth;
        cv::Mat m(d.height(), d.width(), CV_16UC1, cv::Scalar(0));
        for (int r = 0; r < d.height(); ++r) {
            for (int c = 0; c < d.width(); ++c) {
                if (!d.valid(r, c)) continue;
                const auto counts = std::lround(d.value(r, c) / unit.meters_per_count);
                if (counts < 1 || counts > 65535) {
                    throw std::runtime_error("depth " + std::to_string(d.value(r, c)) + " m does not fit unit '" +
                                             unit.descriptor + "'");
                }
                m.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(counts);
            }
        }
        if (!cv::imwrite((dir / kDepthDir / file).string(), m)) {
            throw std::runtime_error("cannot write " + (dir / kDepthDir / file).string());
        }
    }
}

}  // namespace semdepth
