#pragma once

#include <functional>
#include <map>
#include <string>

namespace curvedress {

/// Ordered key -> value string pairs; the interchange form for config echo
/// in run manifests and for flag overrides.
using KvMap = std::map<std::string, std::string, std::less<>>;

}  // namespace curvedress
