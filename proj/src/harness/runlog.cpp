#include "semdepth/runlog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "semdepth/keyvalue.hpp"

namespace semdepth {

void RunLog::append(RunRecord r) {
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (it->split == r.split && it->metric == r.metric) {
            if (r.step <= it->step) {
                throw std::invalid_argument("run log: step " + std::to_string(r.step) + " does not increase for " +
                                            r.split + "/" + r.metric);
            }
            break;
        }
    }
    records_.push_back(std::move(r));
}

std::vector<RunRecord> RunLog::series(const std::string& split, const std::string& metric) const {
    std::vector<RunRecord> out;
    std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
                 [&](const RunRecord& r) { return r.split == split && r.metric == metric; });
    return out;
}

std::vector<std::string> RunLog::splits() const {
    std::vector<std::string> out;
    for (const auto& r : records_) {
        if (std::find(out.begin(), out.end(), r.split) == out.end()) out.push_back(r.split);
    }
    return out;
}

std::vector<std::string> RunLog::metrics(const std::string& split) const {
    std::vector<std::string> out;
    for (const auto& r : records_) {
        if (r.split == split && std::find(out.begin(), out.end(), r.metric) == out.end()) out.push_back(r.metric);
    }
    return out;
}

std::string RunLog::csv_line(const RunRecord& r) {
    return std::to_string(r.step) + "," + r.split + "," + r.metric + "," + format_double(r.value) + "," +
           format_double(r.wall_time_s);
}

std::string RunLog::csv() const {
    std::string out = std::string(kHeader) + "\n";
    for (const auto& r : records_) out += csv_line(r) + "\n";
    return out;
}

void RunLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << csv();
}

RunLog RunLog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run log " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw std::runtime_error(path.string() + ": missing header '" + kHeader + "'");
    }
    RunLog log;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string step, split, metric, value, wall;
        if (!std::getline(fields, step, ',') || !std::getline(fields, split, ',') || !std::getline(fields, metric, ',') ||
            !std::getline(fields, value, ',') || !std::getline(fields, wall)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
        }
        log.append({std::stoll(step), split, metric, std::stod(value), std::stod(wall)});
    }
    return log;
}

bool RunLog::same_values(const RunLog& other) const {
    if (records_.size() != other.records_.size()) return false;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& a = records_[i];
        const auto& b = other.records_[i];
        if (a.step != b.step || a.split != b.split || a.metric != b.metric || a.value != b.value) return false;
    }
    return true;
}

double windowed_average(const RunLog& log, const std::string& split, const std::string& metric, int from_eval,
                        int to_eval) {
    const auto s = log.series(split, metric);
    double sum = 0.0;
    int n = 0;
    for (int k = std::max(1, from_eval); k <= to_eval && k <= static_cast<int>(s.size()); ++k) {
        sum += s[k - 1].value;
        ++n;
    }
    if (n == 0) {
        throw std::invalid_argument("windowed average: no " + split + "/" + metric + " record in evaluations " +
                                    std::to_string(from_eval) + ".." + std::to_string(to_eval));
    }
    return sum / n;
}

}  // namespace semdepth
