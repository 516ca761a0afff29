#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace semdepth {

struct RunRecord {
    std::int64_t step = 0;
    std::string split;
    std::string metric;
    double value = 0.0;
    double wall_time_s = 0.0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Ordered metric records of one run. CSV header: step,split,metric_name,value,wall_time_s.
class RunLog {
public:
    static constexpr const char* kHeader = "step,split,metric_name,value,wall_time_s";

    void append(RunRecord r);
    [[nodiscard]] const std::vector<RunRecord>& records() const { return records_; }
    [[nodiscard]] bool empty() const { return records_.empty(); }

    /// Records of one split and metric, in log order.
    [[nodiscard]] std::vector<RunRecord> series(const std::string& split, const std::string& metric) const;
    [[nodiscard]] std::vector<std::string> splits() const;
    [[nodiscard]] std::vector<std::string> metrics(const std::string& split) const;

    [[nodiscard]] std::string csv() const;
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] static RunLog load(const std::filesystem::path& path);
    [[nodiscard]] static std::string csv_line(const RunRecord& r);

    /// Same records apart from wall time.
    [[nodiscard]] bool same_values(const RunLog& other) const;

    friend bool operator==(const RunLog&, const RunLog&) = default;

private:
    std::vector<RunRecord> records_;
};

/// Mean of `metric` over the evaluations numbered from_eval..to_eval (1-based, inclusive)
/// of `split`. Throws when the window holds no record.
[[nodiscard]] double windowed_average(const RunLog& log, const std::string& split, const std::string& metric,
                                      int from_eval, int to_eval);

}  // namespace semdepth
