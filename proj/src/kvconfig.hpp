#pragma once

// Internal helpers for the small `key = value` config files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "curvedress/errors.hpp"

namespace curvedress::kvconfig {

inline std::map<std::string, std::string, std::less<>> parse(
    const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config " + file.string());
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    long lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(file.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ValidationError(file.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        if (!kv.emplace(key, val).second)
            throw ValidationError(file.string() + ":" + std::to_string(lineno) +
                                  ": duplicate key " + key);
    }
    return kv;
}

inline double to_double(const std::string& file, const std::string& key,
                        const std::string& val) {
    try {
        std::size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(file + ": key " + key + ": expected a number, got \"" +
                              val + "\"");
    }
}

inline int to_int(const std::string& file, const std::string& key,
                  const std::string& val) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(file + ": key " + key + ": expected an integer, got \"" +
                              val + "\"");
    }
}

inline std::uint64_t to_u64(const std::string& file, const std::string& key,
                            const std::string& val) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(file + ": key " + key +
                              ": expected an unsigned integer, got \"" + val + "\"");
    }
}

}  // namespace curvedress::kvconfig
