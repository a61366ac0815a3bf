#pragma once

#include <filesystem>

#include <json.hpp>

#include "vscene/efd.hpp"
#include "vscene/scene.hpp"

namespace vscene {

/// Throws IoFailure when unreadable, ParseError when not JSON.
nlohmann::json load_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; parent directories are created. Throws IoFailure.
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

PrototypeBank load_bank(const std::filesystem::path& path);
void save_bank(const PrototypeBank& bank, const std::filesystem::path& path);

}  // namespace vscene
