#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

namespace segpoison::cli {

// Hex SHA-256 of a file, or of a directory tree (sorted relative paths and
// contents; run manifests inside the tree are skipped).
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_tree(const std::filesystem::path& path);
std::string sha256_path(const std::filesystem::path& path);

// Record of one command invocation. Input digests are taken before any
// processing; the manifest is written whether the command succeeds or not.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& role, const std::filesystem::path& path);
  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_error(const std::string& type, const std::string& message, int exit_code);

  const std::vector<std::string>& argv() const { return argv_; }
  nlohmann::json to_json() const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::object();
  nlohmann::json config_ = nlohmann::json::object();
  std::optional<std::uint64_t> seed_;
  nlohmann::json error_;
};

std::string toolkit_version();

}  // namespace segpoison::cli
