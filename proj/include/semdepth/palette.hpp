#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semdepth/core.hpp"

namespace semdepth {

class MergeTable;

/// Names of the built-in registries: the unified common set and the five driving
/// datasets whose native palettes it was assembled from.
[[nodiscard]] std::vector<std::string> builtin_registry_names();

/// Built-in registry by name ("common", "viper", "synthia_sf", "synscapes", "vkitti", "kitti").
/// Any other string is treated as the path of a CSV registry file (`name,r,g,b` per line,
/// line order = channel order).
[[nodiscard]] ClassRegistry registry_by_name(const std::string& name);

[[nodiscard]] ClassRegistry load_registry_csv(const std::filesystem::path& path);

/// The 11 classes shared by every dataset after subclass merging.
[[nodiscard]] const ClassRegistry& common_registry();

/// Merge table from a built-in dataset palette onto the common set. Subclasses fold into
/// their parent class; classes without one fold into Unlabeled.
[[nodiscard]] MergeTable merge_table_to_common(const std::string& dataset_registry);

}  // namespace semdepth
