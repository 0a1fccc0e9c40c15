#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace coreplace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInternal = 3;

/// Environment variable naming a default hardware profile JSON file.
inline constexpr const char* kHardwareEnv = "COREPLACE_HW_PROFILE";

inline constexpr const char* kManifestName = "manifest.json";

/// Runs one command. `args` excludes the program name. Never throws;
/// failures are reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace coreplace::cli
