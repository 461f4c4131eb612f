#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "raopt/error.hpp"
#include "report_io.hpp"

namespace raopt::cli {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error(ErrorCategory::kIo, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int k = 0; k < length; ++k) {
    out.push_back(kHex[digest[k] >> 4]);
    out.push_back(kHex[digest[k] & 0xf]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

namespace {

nlohmann::ordered_json digests_json(const std::vector<FileDigest>& files) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& f : files) out.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return out;
}

std::vector<FileDigest> digests_from(const nlohmann::ordered_json& items) {
  std::vector<FileDigest> out;
  for (const auto& item : items) {
    out.push_back({item.at("path").get<std::string>(), item.at("sha256").get<std::string>()});
  }
  return out;
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json doc;
  doc["tool"] = "raopt";
  doc["tool_version"] = tool_version;
  doc["subcommand"] = subcommand;
  doc["argv"] = argv;
  doc["config"] = config;
  doc["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  doc["inputs"] = digests_json(inputs);
  doc["outputs"] = digests_json(outputs);
  return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::ordered_json::parse(text);
    RunManifest m;
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.subcommand = doc.at("subcommand").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.config = doc.at("config");
    if (!doc.at("seed").is_null()) m.seed = doc.at("seed").get<std::uint64_t>();
    m.inputs = digests_from(doc.at("inputs"));
    m.outputs = digests_from(doc.at("outputs"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::kValidation, std::string("malformed manifest: ") + e.what());
  }
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

}  // namespace raopt::cli
