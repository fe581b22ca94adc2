#include "xlkb/manifest.hpp"

#include <array>

#include <openssl/evp.h>

#include "xlkb/common.hpp"

namespace xlkb {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0x0f]);
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

RunManifest::RunManifest(std::string command) {
  j_["tool_version"] = kToolVersion;
  j_["command"] = std::move(command);
  j_["seed"] = nullptr;
  j_["config"] = nlohmann::ordered_json::object();
  j_["inputs"] = nlohmann::ordered_json::object();
  j_["outputs"] = nlohmann::ordered_json::object();
}

void RunManifest::set_seed(std::uint64_t seed) {
  j_["seed"] = seed;
}

void RunManifest::set_config(nlohmann::ordered_json config) {
  j_["config"] = std::move(config);
}

void RunManifest::add_input(const std::string& name, const std::filesystem::path& path) {
  j_["inputs"][name] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

void RunManifest::add_output(const std::string& name, const std::filesystem::path& path) {
  j_["outputs"][name] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_file_atomic(path, j_.dump(2) + "\n");
}

}  // namespace xlkb
