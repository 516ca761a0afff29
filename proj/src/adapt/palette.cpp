#include "semdepth/palette.hpp"

#include <array>
#include <fstream>
#include <optional>
#include <sstream>

#include "semdepth/adapt.hpp"

namespace semdepth {

namespace {

enum Column { kViper, kSynthiaSf, kSynscapes, kVkitti, kKitti, kColumnCount };

constexpr std::array<const char*, kColumnCount> kColumnNames = {"viper", "synthia_sf", "synscapes", "vkitti", "kitti"};

using Code = std::optional<Rgb>;
constexpr Code none = std::nullopt;

struct PaletteRow {
    const char* name;
    std::array<Code, kColumnCount> codes;
    const char* common;  // target class in the common set
};

constexpr Rgb rgb(int r, int g, int b) {
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

// Native palettes of the five datasets and where each class lands in the common set.
// Columns: VIPER, SYNTHIA-SF, Synscapes, Virtual KITTI, KITTI.
const std::array<PaletteRow, 39> kRows = {{
    {"Fence", {rgb(190, 153, 153), rgb(190, 153, 153), rgb(190, 153, 153), none, rgb(190, 153, 153)}, "Unlabeled"},
    {"Guard Rail", {none, none, rgb(180, 165, 180), rgb(250, 100, 255), rgb(180, 165, 180)}, "Unlabeled"},
    {"Wall", {none, rgb(102, 102, 156), rgb(102, 102, 156), none, rgb(102, 102, 156)}, "Building"},
    {"Parking", {none, none, rgb(250, 170, 160), none, rgb(250, 170, 160)}, "Road"},
    {"Rail Track", {rgb(230, 150, 140), none, rgb(230, 150, 140), none, rgb(230, 150, 140)}, "Road"},
    {"Road", {rgb(128, 64, 128), rgb(128, 64, 128), rgb(128, 64, 128), rgb(100, 60, 100), rgb(128, 64, 128)}, "Road"},
    {"Sidewalk", {rgb(244, 35, 232), rgb(244, 35, 232), rgb(244, 35, 232), none, rgb(244, 35, 232)}, "Sidewalk"},
    {"Bridge", {none, none, rgb(150, 100, 100), none, rgb(150, 100, 100)}, "Building"},
    {"Building", {rgb(70, 70, 70), rgb(70, 70, 70), rgb(70, 70, 70), rgb(140, 140, 140), rgb(70, 70, 70)}, "Building"},
    {"Tunnel", {none, none, rgb(150, 120, 90), none, rgb(150, 120, 90)}, "Building"},
    {"Person", {rgb(220, 20, 60), rgb(220, 20, 60), rgb(220, 20, 60), none, rgb(220, 20, 60)}, "Person"},
    {"Bicyclist", {rgb(255, 0, 0), rgb(255, 0, 0), rgb(255, 0, 0), none, rgb(255, 0, 0)}, "Person"},
    {"Lane Marking - General", {none, rgb(157, 234, 50), none, none, none}, "Road"},
    {"Sky", {rgb(70, 130, 180), rgb(70, 130, 180), rgb(70, 130, 180), rgb(90, 200, 255), rgb(70, 130, 180)}, "Sky"},
    {"Terrain", {rgb(152, 251, 152), rgb(152, 251, 152), rgb(152, 251, 152), rgb(210, 0, 200), rgb(152, 251, 152)}, "Terrain"},
    {"Vegetation", {rgb(35, 142, 35), rgb(107, 142, 35), rgb(107, 142, 35), rgb(90, 240, 0), rgb(107, 142, 35)}, "Vegetation"},
    {"Pole", {rgb(153, 153, 153), rgb(153, 153, 153), rgb(153, 153, 153), rgb(255, 130, 0), rgb(153, 153, 153)}, "Pole"},
    {"Traffic Light", {rgb(250, 170, 30), rgb(250, 170, 30), rgb(250, 170, 30), rgb(200, 200, 0), rgb(250, 170, 30)}, "Pole"},
    {"Traffic Sign (Front)", {rgb(220, 220, 0), rgb(220, 220, 0), rgb(220, 220, 0), rgb(255, 255, 0), rgb(220, 220, 0)}, "Pole"},
    {"Trash Can", {rgb(81, 0, 81), none, none, none, none}, "Unlabeled"},
    {"Bicycle", {rgb(119, 11, 32), rgb(119, 11, 32), rgb(119, 11, 32), none, rgb(119, 11, 32)}, "Bicycle"},
    {"Boat", {rgb(50, 0, 90), none, none, none, none}, "Unlabeled"},
    {"Bus", {rgb(0, 60, 100), rgb(0, 60, 100), rgb(0, 60, 100), none, rgb(0, 60, 100)}, "Car"},
    {"Car", {rgb(0, 0, 142), rgb(0, 0, 142), rgb(0, 0, 142), rgb(255, 127, 80), rgb(0, 0, 142)}, "Car"},
    {"Caravan", {rgb(0, 0, 90), none, rgb(0, 0, 90), none, rgb(0, 0, 90)}, "Car"},
    {"Motorcycle", {rgb(0, 0, 230), rgb(0, 0, 230), rgb(0, 0, 230), none, rgb(0, 0, 230)}, "Bicycle"},
    {"On Rails", {rgb(0, 80, 100), rgb(0, 80, 100), rgb(0, 80, 100), none, rgb(0, 80, 100)}, "Car"},
    {"Trailer", {none, none, rgb(0, 0, 110), none, rgb(0, 0, 110)}, "Car"},
    {"Truck", {rgb(0, 0, 70), rgb(0, 0, 70), rgb(0, 0, 70), rgb(160, 60, 60), rgb(0, 0, 70)}, "Car"},
    {"ground", {none, none, rgb(81, 0, 81), none, rgb(81, 0, 81)}, "Unlabeled"},
    {"dynamic", {rgb(111, 74, 0), none, rgb(111, 74, 0), none, rgb(111, 74, 0)}, "Unlabeled"},
    {"plane", {rgb(0, 100, 100), none, none, none, none}, "Unlabeled"},
    {"trash", {rgb(81, 0, 21), none, none, none, none}, "Unlabeled"},
    {"chair", {rgb(168, 153, 153), none, none, none, none}, "Unlabeled"},
    {"firehydrant", {rgb(173, 153, 153), none, none, none, none}, "Unlabeled"},
    {"mobilebarrier", {rgb(180, 180, 100), none, none, none, none}, "Unlabeled"},
    {"billboard", {rgb(150, 20, 20), none, none, none, none}, "Unlabeled"},
    {"tree", {rgb(87, 182, 35), none, none, rgb(0, 199, 0), none}, "Unlabeled"},
    {"Misc", {none, none, none, rgb(80, 80, 80), none}, "Unlabeled"},
}};

std::optional<int> column_of(const std::string& name) {
    for (int i = 0; i < kColumnCount; ++i) {
        if (name == kColumnNames[i]) return i;
    }
    return std::nullopt;
}

ClassRegistry dataset_registry(int column) {
    std::vector<ClassEntry> entries{{"Unlabeled", Rgb{}}};
    for (const auto& row : kRows) {
        if (row.codes[column]) entries.push_back({row.name, *row.codes[column]});
    }
    return {kColumnNames[column], std::move(entries)};
}

}  // namespace

std::vector<std::string> builtin_registry_names() {
    std::vector<std::string> out{"common"};
    for (const char* n : kColumnNames) out.emplace_back(n);
    return out;
}

const ClassRegistry& common_registry() {
    static const ClassRegistry registry("common", {
                                                      {"Unlabeled", rgb(0, 0, 0)},
                                                      {"Road", rgb(128, 64, 128)},
                                                      {"Sidewalk", rgb(244, 35, 232)},
                                                      {"Building", rgb(70, 70, 70)},
                                                      {"Person", rgb(220, 20, 60)},
                                                      {"Sky", rgb(70, 130, 180)},
                                                      {"Terrain", rgb(152, 251, 152)},
                                                      {"Vegetation", rgb(107, 142, 35)},
                                                      {"Pole", rgb(153, 153, 153)},
                                                      {"Bicycle", rgb(119, 11, 32)},
                                                      {"Car", rgb(0, 0, 142)},
                                                  });
    return registry;
}

ClassRegistry registry_by_name(const std::string& name) {
    if (name == "common") return common_registry();
    if (auto col = column_of(name)) return dataset_registry(*col);
    if (std::filesystem::exists(name)) return load_registry_csv(name);
    throw std::invalid_argument("unknown class registry '" + name + "'");
}

ClassRegistry load_registry_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open registry file " + path.string());
    std::vector<ClassEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string name;
        std::string r;
        std::string g;
        std::string b;
        if (!std::getline(fields, name, ',') || !std::getline(fields, r, ',') || !std::getline(fields, g, ',') ||
            !std::getline(fields, b)) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected name,r,g,b");
        }
        if (name == "name") continue;  // header
        entries.push_back({name, rgb(std::stoi(r), std::stoi(g), std::stoi(b))});
    }
    return {path.stem().string(), std::move(entries)};
}

MergeTable merge_table_to_common(const std::string& dataset_registry_name) {
    if (dataset_registry_name == "common") {
        std::vector<std::pair<std::string, std::string>> identity;
        for (const auto& e : common_registry().entries()) identity.emplace_back(e.name, e.name);
        return {common_registry(), common_registry(), identity};
    }
    const auto col = column_of(dataset_registry_name);
    if (!col) throw std::invalid_argument("no merge table for registry '" + dataset_registry_name + "'");
    std::vector<std::pair<std::string, std::string>> mapping{{"Unlabeled", "Unlabeled"}};
    for (const auto& row : kRows) {
        if (row.codes[*col]) mapping.emplace_back(row.name, row.common);
    }
    return {dataset_registry(*col), common_registry(), mapping};
}

}  // namespace semdepth
