#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "vscene/analysis.hpp"
#include "vscene/generator.hpp"
#include "vscene/optimize.hpp"
#include "vscene/prototypes.hpp"
#include "vscene/renderer.hpp"

namespace vscene {

inline constexpr const char* kConfigEnvVar = "VSCENE_CONFIG";

struct Paths {
    std::string dataset;
    std::string bank;
    std::string out;

    friend bool operator==(const Paths&, const Paths&) = default;
};

/// Everything the command line needs. `fit.render`, `prototypes.fit` and `analysis.render` mirror
/// `render`; use the accessors below rather than the nested copies.
struct Config {
    RenderConfig render;
    std::size_t harmonics = kDefaultHarmonics;
    GenConfig generator;
    FitConfig fit;
    DiscoveryConfig prototypes;
    AnalysisConfig analysis;
    Paths paths;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = all available cores

    FitConfig fit_config() const;
    DiscoveryConfig discovery_config() const;
    AnalysisConfig analysis_config() const;
};

/// Throws ValidationError naming the offending field path, e.g. "render.sigma".
void validate_config(const Config& c);

nlohmann::json config_to_json(const Config& c);

/// Missing keys keep their defaults; unknown keys and ill-typed values raise ValidationError.
Config config_from_json(const nlohmann::json& j);

/// Throws IoFailure, ParseError or ValidationError.
Config load_config(const std::filesystem::path& path);
void save_config(const Config& c, const std::filesystem::path& path);

/// `explicit_path` when given, otherwise the file named by VSCENE_CONFIG, otherwise defaults.
Config resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace vscene
