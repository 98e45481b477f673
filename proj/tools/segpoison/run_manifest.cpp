#include "segpoison/run_manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include "segpoison/errors.hpp"

#ifndef SEGPOISON_VERSION
#define SEGPOISON_VERSION "0.0.0"
#endif

namespace segpoison::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFileName = "run_manifest.json";

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("cannot initialise SHA-256");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  void update_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for hashing");
    std::array<char, 1 << 16> buf;
    while (in) {
      in.read(buf.data(), buf.size());
      update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_file(const fs::path& path) {
  Sha256 h;
  h.update_file(path);
  return h.hex();
}

std::string sha256_tree(const fs::path& root) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::recursive_directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().filename() != kManifestFileName) {
      files.push_back(fs::relative(it->path(), root));
    }
  }
  if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& rel : files) {
    const std::string name = rel.generic_string();
    h.update(name.data(), name.size() + 1);  // include the terminating NUL as separator
    h.update_file(root / rel);
  }
  return h.hex();
}

std::string sha256_path(const fs::path& path) {
  return fs::is_directory(path) ? sha256_tree(path) : sha256_file(path);
}

std::string toolkit_version() { return SEGPOISON_VERSION; }

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::add_input(const std::string& role, const fs::path& path) {
  json entry{{"path", path.string()}};
  try {
    entry["sha256"] = sha256_path(path);
  } catch (const Error& e) {
    entry["sha256"] = nullptr;
    entry["error"] = e.what();
  }
  inputs_[role] = entry;
}

void RunManifest::add_output(const std::string& role, const fs::path& path) {
  outputs_[role] = path.string();
}

void RunManifest::set_error(const std::string& type, const std::string& message, int exit_code) {
  error_ = {{"type", type}, {"message", message}, {"exit_code", exit_code}};
}

json RunManifest::to_json() const {
  json j;
  j["format"] = "segpoison-run-manifest";
  j["version"] = 1;
  j["toolkit_version"] = toolkit_version();
  j["command"] = command_;
  j["argv"] = argv_;
  j["config"] = config_;
  j["seed"] = seed_ ? json(*seed_) : json(nullptr);
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["status"] = error_.is_null() ? "ok" : "error";
  if (!error_.is_null()) j["error"] = error_;
  return j;
}

}  // namespace segpoison::cli
