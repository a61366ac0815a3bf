#include "vscene/io.hpp"

#include <fstream>
#include <sstream>

#include "vscene/errors.hpp"

namespace vscene {

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoFailure("write failed for " + path.string());
}

Scene load_scene(const std::filesystem::path& path) {
    try {
        return load_json(path).get<Scene>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { save_json(nlohmann::json(scene), path); }

PrototypeBank load_bank(const std::filesystem::path& path) {
    PrototypeBank bank;
    try {
        bank = load_json(path).get<PrototypeBank>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    validate_bank(bank);
    return bank;
}

void save_bank(const PrototypeBank& bank, const std::filesystem::path& path) { save_json(nlohmann::json(bank), path); }

}  // namespace vscene
