#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace xlkb {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Reproducibility record written next to every artifact-producing command's
// output: content hashes of inputs and outputs, the effective config and the
// seed. Deliberately carries no timestamps or host details so a rerun with
// identical inputs produces a byte-identical manifest.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_seed(std::uint64_t seed);
  void set_config(nlohmann::ordered_json config);
  void add_input(const std::string& name, const std::filesystem::path& path);
  void add_output(const std::string& name, const std::filesystem::path& path);

  nlohmann::ordered_json to_json() const { return j_; }
  void write(const std::filesystem::path& path) const;

 private:
  nlohmann::ordered_json j_;
};

}  // namespace xlkb
