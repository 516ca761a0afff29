#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "semdepth/cli.hpp"
#include "semdepth/keyvalue.hpp"

using namespace semdepth;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err).exit_code;
    return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("semdepth_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, ToygenIsDeterministic) {
    const auto a = fresh("toy_a");
    const auto b = fresh("toy_b");
    ASSERT_EQ(cli({"toygen", "--n", "3", "--size", "64x32", "--seed", "5", "--out", a.string()}).code, 0);
    ASSERT_EQ(cli({"toygen", "--n", "3", "--size", "64x32", "--seed", "5", "--out", b.string()}).code, 0);
    for (const auto& e : fs::recursive_directory_iterator(a / "toy")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    }
    EXPECT_TRUE(fs::exists(a / "toy.manifest"));
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"toygen", "--n", "3", "--size", "64", "--out", "x", "--bogus"}).code, 2);
    EXPECT_EQ(cli({"train", "--set", "train.seed=1", "--set", "train.seed=2"}).code, 2);
    EXPECT_EQ(cli({"train", "--set", "train.nope=1"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, OverrideOrderDoesNotMatter) {
    const auto a = resolve_run_config(std::nullopt, {"train.seed=3", "model.variant=M21", "train.lr=0.01"});
    const auto b = resolve_run_config(std::nullopt, {"train.lr=0.01", "train.seed=3", "model.variant=M21"});
    EXPECT_EQ(a.to_keyvalue().values(), b.to_keyvalue().values());
    EXPECT_THROW((void)resolve_run_config(std::nullopt, {"train.seed=3", "train.seed=3"}), ConfigError);
}

TEST(Cli, ConfigPathsResolveAgainstConfigFile) {
    const auto dir = fresh("cfg");
    fs::create_directories(dir / "sub");
    std::ofstream(dir / "sub" / "run.cfg") << "model.variant = M0\ndata.train = ../data/toy.manifest\n";
    const auto c = resolve_run_config(dir / "sub" / "run.cfg", {});
    ASSERT_EQ(c.train_manifests.size(), 1u);
    EXPECT_EQ(fs::weakly_canonical(c.train_manifests[0]), fs::weakly_canonical(dir / "data" / "toy.manifest"));
}

TEST(Cli, TrainEvalAndImageOnlyManifest) {
    const auto data = fresh("data");
    const auto run = fresh("run");
    ASSERT_EQ(cli({"toygen", "--n", "4", "--size", "64", "--seed", "2", "--out", data.string()}).code, 0);
    const auto manifest = (data / "toy.manifest").string();
    const auto t = cli({"train", "--set", "model.variant=M20", "--set", "model.width_scale=0.1", "--set",
                        "data.train=" + manifest, "--set", "data.train_split=all", "--set", "train.max_steps=2",
                        "--set", "train.batch_size=2", "--out", run.string()});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("train M20"), std::string::npos) << t.out;

    const auto ckpt = (run / "checkpoint").string();
    const auto e = cli({"eval", "--checkpoint", ckpt, "--manifest", manifest, "--out", run.string()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_TRUE(fs::exists(run / "eval.csv"));

    fs::remove_all(data / "toy" / "depth");
    const auto bad = cli({"eval", "--checkpoint", ckpt, "--manifest", manifest});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("manifest lacks depth"), std::string::npos) << bad.err;
}

TEST(Cli, DepthHeatmapWritesFiles) {
    const auto data = fresh("hm_data");
    const auto out = fresh("hm_out");
    ASSERT_EQ(cli({"toygen", "--n", "2", "--size", "64x32", "--out", data.string()}).code, 0);
    const auto r = cli({"analyze", "depth-heatmap", "--manifest", (data / "toy.manifest").string(), "--norm",
                        "per_row", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "heatmaps" / "toy_per_row.png"));
    EXPECT_TRUE(fs::exists(out / "heatmaps" / "toy_per_row.csv"));
}
