#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curvedress/kvmap.hpp"

namespace curvedress {

/// Everything needed to repeat a CLI run bit-for-bit: the command, the
/// effective config (already merged from file and flag overrides), absolute
/// input paths, the output location, and the seed. Written as JSON alongside
/// every command's outputs.
struct RunManifest {
    std::string command;
    std::string version;  ///< library version that produced the outputs
    std::uint64_t seed = 0;
    std::string config_path;  ///< source config file, empty when defaults
    KvMap config;             ///< effective config key -> value
    std::vector<std::string> inputs;
    std::string out_path;  ///< output directory or file
    std::vector<std::string> exclude_dates;  ///< ISO dates (backtest only)
    KvMap args;                              ///< remaining command arguments
};

void save_manifest(const RunManifest& m, const std::filesystem::path& file);

/// Throws ValidationError on malformed JSON or missing required fields.
RunManifest load_manifest(const std::filesystem::path& file);

}  // namespace curvedress
