#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "semdepth/runlog.hpp"

using namespace semdepth;

namespace {

RunLog sample_log() {
    RunLog log;
    log.append({0, "model", "trainable_params", 1234, 0.0});
    log.append({4, "train", "loss", 0.123456789012345678, 0.5});
    log.append({4, "test", "mape", 6.0, 0.6});
    log.append({8, "train", "loss", 0.1, 1.0});
    log.append({8, "test", "mape", 8.0, 1.1});
    return log;
}

}  // namespace

TEST(RunLog, SeriesSplitsMetrics) {
    const auto log = sample_log();
    EXPECT_EQ(log.series("test", "mape").size(), 2u);
    EXPECT_EQ(log.splits(), (std::vector<std::string>{"model", "train", "test"}));
    EXPECT_EQ(log.metrics("train"), (std::vector<std::string>{"loss"}));
}

TEST(RunLog, StepsMustIncreasePerSeries) {
    auto log = sample_log();
    EXPECT_THROW(log.append({8, "test", "mape", 1.0, 2.0}), std::invalid_argument);
    EXPECT_NO_THROW(log.append({8, "test", "rmse", 1.0, 2.0}));
}

TEST(RunLog, CsvRoundTripIsExact) {
    const auto log = sample_log();
    const auto path = std::filesystem::temp_directory_path() / "semdepth_runlog_test.csv";
    log.save(path);
    const auto back = RunLog::load(path);
    EXPECT_EQ(back, log);
    EXPECT_EQ(log.csv().substr(0, std::string(RunLog::kHeader).size()), RunLog::kHeader);
}

TEST(RunLog, LoadRejectsForeignFiles) {
    const auto path = std::filesystem::temp_directory_path() / "semdepth_runlog_bad.csv";
    {
        std::ofstream(path) << "a,b,c\n";
    }
    EXPECT_THROW((void)RunLog::load(path), std::runtime_error);
}

TEST(RunLog, SameValuesIgnoresWallTime) {
    auto a = sample_log();
    RunLog b;
    for (auto r : a.records()) {
        r.wall_time_s += 3.0;
        b.append(r);
    }
    EXPECT_TRUE(a.same_values(b));
    EXPECT_FALSE(a == b);
}

TEST(WindowedAverage, ConstantAndPair) {
    RunLog log;
    for (int k = 1; k <= 5; ++k) log.append({k, "test", "mape", 7.0, 0});
    EXPECT_DOUBLE_EQ(windowed_average(log, "test", "mape", 2, 4), 7.0);
    EXPECT_DOUBLE_EQ(windowed_average(sample_log(), "test", "mape", 1, 2), 7.0);
    EXPECT_DOUBLE_EQ(windowed_average(sample_log(), "test", "mape", 2, 100), 8.0);
}

TEST(WindowedAverage, EmptyWindowThrows) {
    EXPECT_THROW((void)windowed_average(sample_log(), "test", "mape", 3, 5), std::invalid_argument);
    EXPECT_THROW((void)windowed_average(sample_log(), "test", "silog", 1, 5), std::invalid_argument);
}
