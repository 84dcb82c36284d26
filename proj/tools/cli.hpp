#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace codessm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Bad command line, or an output directory that would be overwritten.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Copies patch into base. Every key of patch must already exist in base;
/// nested objects merge recursively. Throws ConfigError naming the key.
void merge_strict(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

/// Applies a dotted `a.b=value` override. The value is read as JSON when it
/// parses, otherwise as a string.
void apply_override(nlohmann::json& base, const std::string& assignment);

/// Runs one command. args excludes the program name. Failures print a single
/// JSON line {"error":kind,"exit":code,"message":...} on err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codessm::cli
