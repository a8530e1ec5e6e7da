#include "curvedress/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "curvedress/errors.hpp"

namespace curvedress {

namespace {

using Json = nlohmann::ordered_json;

Json kv_to_json(const KvMap& kv) {
    Json obj = Json::object();
    for (const auto& [k, v] : kv) obj[k] = v;
    return obj;
}

KvMap json_to_kv(const Json& obj, const std::string& what) {
    if (!obj.is_object()) throw ValidationError("manifest: " + what + " must be an object");
    KvMap kv;
    for (const auto& [k, v] : obj.items()) {
        if (!v.is_string()) {
            throw ValidationError("manifest: " + what + "." + k + " must be a string");
        }
        kv.emplace(k, v.get<std::string>());
    }
    return kv;
}

}  // namespace

void save_manifest(const RunManifest& m, const std::filesystem::path& file) {
    Json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["config_path"] = m.config_path;
    j["config"] = kv_to_json(m.config);
    j["inputs"] = m.inputs;
    j["out_path"] = m.out_path;
    j["exclude_dates"] = m.exclude_dates;
    j["args"] = kv_to_json(m.args);
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write manifest " + file.string());
    out << j.dump(2) << "\n";
    if (!out.flush()) throw ValidationError("write failure on " + file.string());
}

RunManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open manifest " + file.string());
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& err) {
        throw ValidationError("manifest " + file.string() + ": " + err.what());
    }
    auto require = [&](const char* key) -> const Json& {
        if (!j.contains(key)) {
            throw ValidationError("manifest " + file.string() + ": missing field \"" + key + "\"");
        }
        return j.at(key);
    };
    RunManifest m;
    try {
        m.command = require("command").get<std::string>();
        m.version = require("version").get<std::string>();
        m.seed = require("seed").get<std::uint64_t>();
        m.config_path = require("config_path").get<std::string>();
        m.config = json_to_kv(require("config"), "config");
        m.inputs = require("inputs").get<std::vector<std::string>>();
        m.out_path = require("out_path").get<std::string>();
        m.exclude_dates = require("exclude_dates").get<std::vector<std::string>>();
        m.args = json_to_kv(require("args"), "args");
    } catch (const Json::exception& err) {
        throw ValidationError("manifest " + file.string() + ": " + err.what());
    }
    return m;
}

}  // namespace curvedress
