#include "segpoison/dataset_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "segpoison/errors.hpp"

namespace segpoison {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kDatasetFormat = "segpoison-dataset";
constexpr const char* kMaskSetFormat = "segpoison-masks";
constexpr int kFormatVersion = 1;

struct PngImageGuard {
  png_image image{};
  PngImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
};

void write_png_raw(const fs::path& path, int width, int height, png_uint_32 format,
                   const std::uint8_t* pixels) {
  if (width <= 0 || height <= 0) {
    throw IoError("refusing to encode empty image " + path.string());
  }
  PngImageGuard guard;
  guard.image.width = static_cast<png_uint_32>(width);
  guard.image.height = static_cast<png_uint_32>(height);
  guard.image.format = format;
  if (!png_image_write_to_file(&guard.image, path.c_str(), 0, pixels, 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + guard.image.message);
  }
}

std::vector<std::uint8_t> read_png_raw(const fs::path& path, png_uint_32 want_format,
                                       int& width, int& height) {
  PngImageGuard guard;
  if (!png_image_begin_read_from_file(&guard.image, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + guard.image.message);
  }
  // Only exact 8-bit RGB / gray sources are accepted: any conversion could
  // alter pixel or class values.
  const png_uint_32 src = guard.image.format;
  if ((src & PNG_FORMAT_FLAG_LINEAR) || (src & PNG_FORMAT_FLAG_ALPHA) ||
      (src & PNG_FORMAT_FLAG_COLORMAP) ||
      ((src & PNG_FORMAT_FLAG_COLOR) != (want_format & PNG_FORMAT_FLAG_COLOR))) {
    throw IoError(path.string() + ": expected 8-bit " +
                  ((want_format & PNG_FORMAT_FLAG_COLOR) ? "RGB" : "grayscale") + " PNG");
  }
  guard.image.format = want_format;
  width = static_cast<int>(guard.image.width);
  height = static_cast<int>(guard.image.height);
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(guard.image));
  if (!png_image_finish_read(&guard.image, nullptr, pixels.data(), 0, nullptr)) {
    throw IoError("cannot decode " + path.string() + ": " + guard.image.message);
  }
  return pixels;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json read_manifest(const fs::path& dir, const char* expected_format) {
  const fs::path path = dir / kManifestName;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    if (m.at("format").get<std::string>() != expected_format) {
      throw InputError(path.string() + ": format is '" + m.at("format").get<std::string>() +
                       "', expected '" + expected_format + "'");
    }
    if (m.at("version").get<int>() != kFormatVersion) {
      throw InputError(path.string() + ": unsupported version");
    }
    m.at("num_classes").get<int>();
    m.at("samples").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return m;
}

void check_ids(const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (!is_valid_sample_id(id)) throw InputError("invalid sample id '" + id + "'");
  }
}

json make_manifest(const char* format, int num_classes, Split split,
                   const std::vector<std::string>& ids) {
  json m;
  m["format"] = format;
  m["version"] = kFormatVersion;
  m["num_classes"] = num_classes;
  m["split"] = std::string(to_string(split));
  m["samples"] = ids;
  return m;
}

}  // namespace

bool is_valid_sample_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

void write_png(const fs::path& path, const Image& image) {
  write_png_raw(path, image.width, image.height, PNG_FORMAT_RGB, image.data.data());
}

void write_png(const fs::path& path, const LabelMask& mask) {
  write_png_raw(path, mask.width, mask.height, PNG_FORMAT_GRAY, mask.data.data());
}

Image read_png_image(const fs::path& path) {
  Image img;
  img.data = read_png_raw(path, PNG_FORMAT_RGB, img.width, img.height);
  return img;
}

LabelMask read_png_mask(const fs::path& path) {
  LabelMask mask;
  mask.data = read_png_raw(path, PNG_FORMAT_GRAY, mask.width, mask.height);
  return mask;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  std::vector<std::string> ids;
  ids.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) ids.push_back(s.id);
  check_ids(ids);

  ensure_dir(dir / "images");
  ensure_dir(dir / "masks");
  for (const Sample& s : dataset.samples) {
    write_png(dir / "images" / (s.id + ".png"), s.image);
    write_png(dir / "masks" / (s.id + ".png"), s.mask);
  }
  write_text(dir / kManifestName,
             make_manifest(kDatasetFormat, dataset.num_classes, dataset.split, ids).dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const json m = read_manifest(dir, kDatasetFormat);
  Dataset d;
  d.num_classes = m.at("num_classes").get<int>();
  d.split = parse_split(m.value("split", std::string("train")));
  const auto ids = m.at("samples").get<std::vector<std::string>>();
  check_ids(ids);
  d.samples.reserve(ids.size());
  for (const auto& id : ids) {
    Sample s;
    s.id = id;
    s.image = read_png_image(dir / "images" / (id + ".png"));
    s.mask = read_png_mask(dir / "masks" / (id + ".png"));
    d.samples.push_back(std::move(s));
  }
  return d;
}

void save_mask_set(const MaskSet& set, const fs::path& dir) {
  if (set.ids.size() != set.masks.size()) {
    throw InputError("mask set has " + std::to_string(set.ids.size()) + " ids but " +
                     std::to_string(set.masks.size()) + " masks");
  }
  check_ids(set.ids);
  ensure_dir(dir / "masks");
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    write_png(dir / "masks" / (set.ids[i] + ".png"), set.masks[i]);
  }
  write_text(dir / kManifestName,
             make_manifest(kMaskSetFormat, set.num_classes, set.split, set.ids).dump(2) + "\n");
}

MaskSet load_mask_set(const fs::path& dir) {
  const json m = read_manifest(dir, kMaskSetFormat);
  MaskSet set;
  set.num_classes = m.at("num_classes").get<int>();
  set.split = parse_split(m.value("split", std::string("test")));
  set.ids = m.at("samples").get<std::vector<std::string>>();
  check_ids(set.ids);
  set.masks.reserve(set.ids.size());
  for (const auto& id : set.ids) set.masks.push_back(read_png_mask(dir / "masks" / (id + ".png")));
  return set;
}

}  // namespace segpoison
