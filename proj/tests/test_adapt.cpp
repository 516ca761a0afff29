#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "semdepth/adapt.hpp"
#include "semdepth/palette.hpp"
#include "semdepth/toy.hpp"

using namespace semdepth;
namespace fs = std::filesystem;

namespace {

const AfovTarget kLyft = reference_afov("lyft");

CropPlan plan_for(double f, int w, int h) { return plan_afov_crop({f, w, h}, kLyft.horizontal_deg, kLyft.vertical_deg); }

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("semdepth_adapt_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(AfovCrop, ReferenceIsLyft) {
    EXPECT_NEAR(kLyft.horizontal_deg, 69.28, 0.005);
    EXPECT_NEAR(kLyft.vertical_deg, 22.62, 0.005);
    EXPECT_THROW((void)reference_afov("nuscenes"), std::invalid_argument);
}

TEST(AfovCrop, PreSIL) {
    const auto p = plan_for(960, 1920, 1080);
    EXPECT_EQ(p.crop_width, 1328);
    EXPECT_EQ(p.crop_height, 384);
    EXPECT_NEAR(p.achieved_h_afov, 69.34, 0.005);
    EXPECT_NEAR(p.achieved_v_afov, 22.62, 0.005);
    EXPECT_EQ(p.origin_col, (1920 - 1328) / 2);
    EXPECT_EQ(p.origin_row, (1080 - 384) / 2);
}

TEST(AfovCrop, EvenWidthCeilRuleAgainstDirectFormula) {
    // 2·f·tan(θ/2) by hand, then ceil (to even for the width).
    const double f = 725.0;
    const double w = 2 * f * std::tan(kLyft.horizontal_deg * M_PI / 360.0);
    const double h = 2 * f * std::tan(kLyft.vertical_deg * M_PI / 360.0);
    int ew = static_cast<int>(std::ceil(w - 0.01));
    if (ew % 2) ++ew;
    const auto p = plan_for(f, 1242, 375);
    EXPECT_EQ(p.crop_width, ew);
    EXPECT_EQ(p.crop_height, static_cast<int>(std::ceil(h - 0.01)));
    EXPECT_EQ(p.crop_width, 1002);
    EXPECT_EQ(p.crop_height, 290);
}

TEST(AfovCrop, OtherTableRows) {
    const struct {
        double f;
        int w, h, cw, ch;
    } rows[] = {{847.6, 1920, 1080, 1172, 340}, {1158, 1920, 1080, 1602, 464}, {721.5, 1242, 375, 998, 289}};
    for (const auto& r : rows) {
        const auto p = plan_for(r.f, r.w, r.h);
        EXPECT_EQ(p.crop_width, r.cw) << r.f;
        EXPECT_EQ(p.crop_height, r.ch) << r.f;
    }
}

TEST(AfovCrop, IdentityWhenAlreadyAtTarget) {
    const auto p = plan_for(880, 1216, 352);
    EXPECT_EQ(p.crop_width, 1216);
    EXPECT_EQ(p.crop_height, 352);
    EXPECT_EQ(p.origin_row, 0);
    EXPECT_EQ(p.origin_col, 0);
}

TEST(AfovCrop, ClampsNarrowSource) {
    // SYNSCAPES: narrower than the reference on both axes.
    const auto p = plan_for(1590, 1440, 416);
    EXPECT_EQ(p.crop_width, 1440);
    EXPECT_EQ(p.crop_height, 416);
    EXPECT_NEAR(p.achieved_h_afov, 48.72, 0.01);
    EXPECT_NEAR(p.achieved_v_afov, 14.91, 0.01);
}

TEST(AfovCrop, AchievedNeverExceedsTargetUnlessClamped) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const double f = oracle::uniform(rng, 200, 2000);
        const int w = 64 + static_cast<int>(rng() % 3000);
        const int h = 64 + static_cast<int>(rng() % 2000);
        const auto p = plan_for(f, w, h);
        EXPECT_LE(p.crop_width, w);
        EXPECT_LE(p.crop_height, h);
        EXPECT_GE(p.origin_col, 0);
        EXPECT_LE(p.origin_col + p.crop_width, w);
        EXPECT_LE(p.origin_row + p.crop_height, h);
        // Unclamped axes overshoot the target by less than two pixels' worth of angle.
        const double px_deg = 180.0 / M_PI / f;
        if (p.crop_width < w) {
            EXPECT_GE(p.achieved_h_afov, kLyft.horizontal_deg - 0.01 * px_deg);
            EXPECT_LE(p.achieved_h_afov, kLyft.horizontal_deg + 2.01 * px_deg);
        }
        if (p.crop_height < h) {
            EXPECT_GE(p.achieved_v_afov, kLyft.vertical_deg - 0.01 * px_deg);
            EXPECT_LE(p.achieved_v_afov, kLyft.vertical_deg + 1.01 * px_deg);
        }
    }
}

TEST(CropResize, ConstantImageAndFocalRescale) {
    Sample s;
    s.image = ImageTensor(100, 200, 0.4F);
    s.intrinsics = {150.0, 200, 100};
    const auto plan = plan_afov_crop(s.intrinsics, 60.0, 20.0, {64, 32});
    const auto out = apply_crop_resize(s, plan);
    EXPECT_EQ(out.image.width(), 64);
    EXPECT_EQ(out.image.height(), 32);
    for (float v : out.image.data()) EXPECT_NEAR(v, 0.4F, 1e-6);
    EXPECT_DOUBLE_EQ(out.intrinsics.focal_length_px, 150.0 * 64 / plan.crop_width);
    EXPECT_EQ(out.intrinsics.width_px, 64);
}

TEST(CropResize, OneHotStaysOneHot) {
    auto s = generate_toy_dataset(1, 96, 64, common_registry(), 2).front();
    const auto plan = plan_afov_crop(s.intrinsics, 50.0, 30.0, {64, 32});
    const auto out = apply_crop_resize(s, plan);
    EXPECT_TRUE(validate_sample(out).empty());
}

TEST(CropResize, CheckerboardCenter) {
    Sample s;
    s.image = ImageTensor(4, 4, 0.0F);
    s.intrinsics = {2.0, 4, 4};
    s.depth = DepthMap(4, 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) s.depth->set(r, c, static_cast<float>(1 + r * 4 + c), (r + c) % 2 == 0);
    }
    CropPlan plan;
    plan.source = s.intrinsics;
    plan.crop_width = 2;
    plan.crop_height = 2;
    plan.origin_row = 1;
    plan.origin_col = 1;
    plan.target = {2, 2};
    const auto out = apply_crop_resize(s, plan);
    const float expected[2][2] = {{6, 7}, {10, 11}};
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            EXPECT_EQ(out.depth->value(r, c), expected[r][c]);
            EXPECT_EQ(out.depth->valid(r, c), (r + c) % 2 == 0);
        }
    }
}

TEST(CropResize, RejectsMismatchedPlan) {
    Sample s;
    s.image = ImageTensor(10, 10);
    s.intrinsics = {10, 10, 10};
    auto plan = plan_afov_crop({10, 20, 10}, 30, 30, {2, 2});
    EXPECT_THROW((void)apply_crop_resize(s, plan), std::invalid_argument);
}

TEST(OneHot, RoadPixel) {
    RgbImage img(1, 2, Rgb{128, 64, 128});
    img.set_pixel(0, 1, Rgb{0, 0, 0});
    const auto r = rgb_to_onehot(img, common_registry());
    EXPECT_EQ(r.map.at(0, 0, 1), 1.0F);
    EXPECT_EQ(r.map.argmax(0, 1), 0);
    EXPECT_EQ(r.unmatched_pixels, 0u);
}

TEST(OneHot, UnknownColorsCountedAsUnlabeled) {
    RgbImage img(1, 1, Rgb{1, 2, 3});
    const auto r = rgb_to_onehot(img, common_registry());
    EXPECT_EQ(r.unmatched_pixels, 1u);
    EXPECT_EQ(r.map.at(0, 0, 0), 1.0F);
}

TEST(OneHot, RoundTripRandomImages) {
    std::mt19937_64 rng(5);
    for (const auto& name : builtin_registry_names()) {
        const auto reg = registry_by_name(name);
        RgbImage img(7, 9);
        for (int r = 0; r < 7; ++r) {
            for (int c = 0; c < 9; ++c) img.set_pixel(r, c, reg[rng() % reg.size()].rgb);
        }
        const auto oh = rgb_to_onehot(img, reg);
        EXPECT_EQ(onehot_to_rgb(oh.map, reg), img) << name;
    }
}

TEST(OneHot, UniformProbabilitiesGoUnlabeled) {
    SemanticLabelMap m(2, 2, 11, 1.0F / 11);
    const auto img = onehot_to_rgb(m, common_registry());
    for (auto v : img.data()) EXPECT_EQ(v, 0);
    EXPECT_THROW((void)onehot_to_rgb(SemanticLabelMap(1, 1, 3), common_registry()), std::invalid_argument);
}

TEST(Merge, WallBecomesBuilding) {
    const auto table = merge_table_to_common("synthia_sf");
    const auto& src = table.source();
    RgbImage img(1, 1, Rgb{102, 102, 156});
    const auto merged = merge_classes(rgb_to_onehot(img, src).map, table);
    EXPECT_EQ(merged.argmax(0, 0), static_cast<int>(*common_registry().index_of("Building")));
}

TEST(Merge, SelfMappedClassUnchanged) {
    const auto table = merge_table_to_common("kitti");
    RgbImage img(1, 1, Rgb{128, 64, 128});
    const auto merged = merge_classes(rgb_to_onehot(img, table.source()).map, table);
    EXPECT_EQ(merged.argmax(0, 0), 1);
}

TEST(Merge, RandomOneHotKeepsUnitMass) {
    std::mt19937_64 rng(9);
    for (const auto& name : builtin_registry_names()) {
        if (name == "common") continue;
        const auto table = merge_table_to_common(name);
        const int n = static_cast<int>(table.source().size());
        const auto labels = oracle::random_labels(rng, 64, n);
        const auto merged = merge_classes(SemanticLabelMap::one_hot(8, 8, n, labels), table);
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 8; ++c) {
                float sum = 0;
                for (int k = 0; k < merged.channels(); ++k) sum += merged.at(r, c, k);
                EXPECT_EQ(sum, 1.0F);
                EXPECT_EQ(merged.at(r, c, static_cast<int>(table.target_of(labels[r * 8 + c]))), 1.0F);
            }
        }
    }
}

TEST(Merge, TableValidation) {
    const auto& common = common_registry();
    EXPECT_THROW(MergeTable(common, common, {{"Road", "Road"}}), std::invalid_argument);
    std::vector<std::pair<std::string, std::string>> all;
    for (const auto& e : common.entries()) all.emplace_back(e.name, e.name);
    all.emplace_back("Road", "Sky");
    EXPECT_THROW(MergeTable(common, common, all), std::invalid_argument);
    all.pop_back();
    all[1].second = "REMOVE";
    const MergeTable t(common, common, all);
    EXPECT_EQ(t.target_of(1), 0u);
}

TEST(DepthUnit, Descriptors) {
    EXPECT_DOUBLE_EQ(parse_depth_unit("m").meters_per_count, 1.0);
    EXPECT_DOUBLE_EQ(parse_depth_unit("cm").meters_per_count, 0.01);
    EXPECT_DOUBLE_EQ(parse_depth_unit("mm").meters_per_count, 0.001);
    EXPECT_DOUBLE_EQ(parse_depth_unit("1/256 m").meters_per_count, 1.0 / 256);
    EXPECT_THROW((void)parse_depth_unit("inch"), std::invalid_argument);
    EXPECT_THROW((void)parse_depth_unit("1/0 m"), std::invalid_argument);
}

TEST(Convert, PixelAndDepthValues) {
    RawSample raw;
    raw.image = RgbImage(1, 3, Rgb{255, 0, 51});
    raw.depth = Grid<std::uint16_t>(1, 3, 1, std::vector<std::uint16_t>{25600, 0, 30000});
    raw.intrinsics = {10, 3, 1};
    const auto out = normalize_and_convert(raw, parse_depth_unit("1/256 m"), nullptr, 100.0).sample;
    EXPECT_EQ(out.image.at(0, 0, 0), 1.0F);
    EXPECT_FLOAT_EQ(out.image.at(0, 0, 2), 0.2F);
    EXPECT_EQ(out.depth->value(0, 0), 100.0F);
    EXPECT_TRUE(out.depth->valid(0, 0));
    EXPECT_FALSE(out.depth->valid(0, 1));
    EXPECT_FALSE(out.depth->valid(0, 2));  // 117 m beyond the cap
}

TEST(Split, SeventyFiveTwentyFive) {
    std::vector<int> items(100);
    std::iota(items.begin(), items.end(), 0);
    const auto s = split_dataset(items, 0.75, 42);
    EXPECT_EQ(s.train.size(), 75u);
    EXPECT_EQ(s.test.size(), 25u);
    std::vector<int> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, items);
    const auto again = split_dataset(items, 0.75, 42);
    EXPECT_EQ(again.train, s.train);
    EXPECT_NE(split_dataset(items, 0.75, 43).train, s.train);
}

TEST(Split, TooSmall) {
    try {
        (void)split_dataset(std::vector<int>{1}, 0.75, 0);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("split too small"), std::string::npos);
    }
    EXPECT_THROW((void)split_dataset(std::vector<int>{1, 2}, 1.0, 0), std::invalid_argument);
}

TEST(Toy, Deterministic) {
    const auto a = generate_toy_dataset(1, 64, 64, common_registry(), 7);
    const auto b = generate_toy_dataset(1, 64, 64, common_registry(), 7);
    EXPECT_EQ(a[0].image, b[0].image);
    EXPECT_EQ(*a[0].semantic, *b[0].semantic);
    EXPECT_EQ(*a[0].depth, *b[0].depth);
}

TEST(Toy, GroundPlaneGeometry) {
    const int w = 64, h = 64;
    const auto s = render_toy_scene(w, h, common_registry(), {});
    const double f = w * 880.0 / 1216.0;
    for (int r = 0; r < h; ++r) {
        const double v = r + 0.5 - h / 2.0;
        const double z = v > 0 ? 1.6 * f / v : 0.0;
        const bool valid = v > 0 && z <= 100.0;
        EXPECT_EQ(s.depth->valid(r, 17), valid) << r;
        if (valid) EXPECT_NEAR(s.depth->value(r, 17), z, 1e-4 * z);
    }
}

TEST(Toy, BoxExtentMatchesPinhole) {
    const auto& reg = common_registry();
    const int car = static_cast<int>(*reg.index_of("Car"));
    const ToyBox box{car, 10.0, 0.5, 2.0, 1.5, std::nullopt};
    const auto s = render_toy_scene(64, 64, reg, {box});
    const double f = 64 * 880.0 / 1216.0;
    const double left = 32 + f * (0.5 - 1.0) / 10, right = 32 + f * (0.5 + 1.0) / 10;
    const double top = 32 + f * (1.6 - 1.5) / 10, bottom = 32 + f * 1.6 / 10;
    for (int r = 0; r < 64; ++r) {
        for (int c = 0; c < 64; ++c) {
            const bool inside = c + 0.5 >= left && c + 0.5 < right && r + 0.5 >= top && r + 0.5 < bottom;
            EXPECT_EQ(s.semantic->argmax(r, c) == car, inside);
            if (inside) EXPECT_EQ(s.depth->value(r, c), 10.0F);
        }
    }
}

TEST(Toy, AllSamplesWellFormed) {
    ToyOptions opts;
    opts.illumination_jitter = 0.3;
    opts.noise = 0.1;
    opts.random_object_colors = true;
    for (const auto& s : generate_toy_dataset(10, 64, 32, common_registry(), 1, opts)) {
        EXPECT_TRUE(validate_sample(s).empty());
    }
    EXPECT_THROW((void)generate_toy_dataset(1, 60, 64, common_registry(), 1), std::invalid_argument);
    EXPECT_THROW((void)generate_toy_dataset(0, 64, 64, common_registry(), 1), std::invalid_argument);
}

TEST(Manifest, WriteLoadRoundTrip) {
    const auto dir = temp_dir("manifest");
    const auto samples = generate_toy_dataset(4, 64, 32, common_registry(), 3);
    DatasetManifest m;
    m.dataset_id = "toy";
    m.root = dir;
    m.intrinsics = samples[0].intrinsics;
    m.depth_unit = parse_depth_unit("1/256 m");
    for (const auto& s : samples) write_sample(dir, s, common_registry(), m.depth_unit);
    for (const auto& s : samples) m.frames.push_back({s.frame_id, {}, {}, {}});
    save_manifest(m, dir / "toy.manifest");
    const auto loaded = load_manifest(dir / "toy.manifest");
    EXPECT_TRUE(loaded.has_depth());
    EXPECT_TRUE(loaded.has_semantic());
    ASSERT_EQ(loaded.frames.size(), 4u);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto back = load_sample(loaded, loaded.frames[i]);
        EXPECT_EQ(*back.semantic, *samples[i].semantic);
        for (std::size_t k = 0; k < back.image.data().size(); ++k) {
            EXPECT_NEAR(back.image.data()[k], samples[i].image.data()[k], 0.5 / 255 + 1e-6);
        }
        for (int r = 0; r < 32; ++r) {
            for (int c = 0; c < 64; ++c) {
                ASSERT_EQ(back.depth->valid(r, c), samples[i].depth->valid(r, c));
                if (back.depth->valid(r, c)) EXPECT_NEAR(back.depth->value(r, c), samples[i].depth->value(r, c), 1.0 / 512);
            }
        }
    }
    EXPECT_EQ(select_frames(loaded, "train").size(), 3u);
    EXPECT_EQ(select_frames(loaded, "test").size(), 1u);
    EXPECT_THROW((void)select_frames(loaded, "val"), std::invalid_argument);
}

TEST(Manifest, MissingFilesListed) {
    const auto dir = temp_dir("missing");
    DatasetManifest m;
    m.dataset_id = "ghost";
    m.root = dir;
    m.intrinsics = {10, 64, 32};
    m.frames.push_back({"a", {}, {}, {}});
    m.frames.push_back({"b", {}, {}, {}});
    save_manifest(m, dir / "ghost.manifest");
    try {
        (void)load_manifest(dir / "ghost.manifest");
        FAIL();
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        SCOPED_TRACE(msg);
        EXPECT_NE(msg.find("a.png"), std::string::npos);
        EXPECT_NE(msg.find("b.png"), std::string::npos);
    }
}
