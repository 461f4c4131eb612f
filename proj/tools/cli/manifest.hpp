#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace raopt::cli {

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

/// Everything needed to repeat a run: the exact arguments, the options they
/// resolved to, and digests of every file read or written. Contains no
/// timestamps or host details, so two identical runs write identical manifests.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;  // arguments after the program name
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

/// <output>.manifest.json
std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace raopt::cli
