#include "granulab/camera/depth_io.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

#include "granulab/core/error.hpp"
#include "granulab/core/file_io.hpp"
#include "granulab/core/json.hpp"
#include "granulab/core/text.hpp"

namespace granulab::camera {

namespace {

constexpr const char* kDepthSchema = "granulab.depth/1";

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void check_finite(const DepthImage& img, const std::string& origin) {
  for (std::size_t i = 0; i < img.depth.size(); ++i)
    if (!std::isfinite(img.depth[i]))
      throw DataError("non-finite depth at pixel " + std::to_string(i) + " in " + origin);
}

}  // namespace

void save_depth(const std::filesystem::path& path, const DepthImage& img) {
  if (img.depth.size() != static_cast<std::size_t>(img.width) * img.height)
    throw ValidationError("depth buffer size does not match dimensions");
  Json side;
  side["schema"] = kDepthSchema;
  side["width"] = img.width;
  side["height"] = img.height;
  Json cam;
  cam["camera_height"] = img.config.camera_height;
  cam["fx"] = img.config.fx;
  cam["fy"] = img.config.fy;
  cam["cx"] = img.config.cx;
  cam["cy"] = img.config.cy;
  cam["downsample_factor"] = img.config.downsample_factor;
  side["camera"] = cam;
  std::string raw(reinterpret_cast<const char*>(img.depth.data()),
                  img.depth.size() * sizeof(float));
  write_file_atomic(path, raw);
  save_json(sidecar_path(path), side);
}

DepthImage load_depth(const std::filesystem::path& path) {
  Json side = load_json(sidecar_path(path));
  if (require_string(side, "schema") != kDepthSchema)
    throw DataError("unsupported depth schema in " + sidecar_path(path).string());
  DepthImage img;
  img.width = static_cast<int>(require_integer(side, "width"));
  img.height = static_cast<int>(require_integer(side, "height"));
  if (img.width < 1 || img.height < 1)
    throw DataError("bad dimensions in " + sidecar_path(path).string());
  const Json& cam = require_key(side, "camera");
  img.config.camera_height = require_number(cam, "camera_height");
  img.config.fx = require_number(cam, "fx");
  img.config.fy = require_number(cam, "fy");
  img.config.cx = require_number(cam, "cx");
  img.config.cy = require_number(cam, "cy");
  img.config.downsample_factor = static_cast<int>(require_integer(cam, "downsample_factor"));
  img.config.width = img.width;
  img.config.height = img.height;
  std::string raw = read_file(path);
  std::size_t expected = static_cast<std::size_t>(img.width) * img.height * sizeof(float);
  if (raw.size() != expected)
    throw DataError(path.string() + " holds " + std::to_string(raw.size()) +
                    " bytes, expected " + std::to_string(expected));
  img.depth.resize(static_cast<std::size_t>(img.width) * img.height);
  std::memcpy(img.depth.data(), raw.data(), raw.size());
  check_finite(img, path.string());
  return img;
}

namespace {

// Reads the next PGM header token, skipping whitespace and # comments.
std::string pgm_token(const std::string& text, std::size_t& pos) {
  while (pos < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    } else if (text[pos] == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (start == pos) throw DataError("truncated PGM header");
  return text.substr(start, pos - start);
}

}  // namespace

DepthImage import_depth_pgm(const std::filesystem::path& path, const CameraConfig& cam) {
  std::string text = read_file(path);
  std::size_t pos = 0;
  if (pgm_token(text, pos) != "P5")
    throw DataError(path.string() + " is not a binary PGM (P5) file");
  long long width = parse_int(pgm_token(text, pos));
  long long height = parse_int(pgm_token(text, pos));
  long long maxval = parse_int(pgm_token(text, pos));
  if (width < 1 || height < 1) throw DataError("bad PGM dimensions in " + path.string());
  if (maxval < 256 || maxval > 65535)
    throw DataError("PGM maxval " + std::to_string(maxval) +
                    " is not a two-byte depth encoding in " + path.string());
  ++pos;  // single whitespace byte after maxval
  std::size_t expected = static_cast<std::size_t>(width) * height * 2;
  if (text.size() - pos != expected)
    throw DataError(path.string() + " holds " + std::to_string(text.size() - pos) +
                    " sample bytes, expected " + std::to_string(expected));
  DepthImage img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.config = cam;
  img.config.width = img.width;
  img.config.height = img.height;
  img.depth.resize(static_cast<std::size_t>(width) * height);
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(text.data()) + pos;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    unsigned value = static_cast<unsigned>(bytes[2 * i]) << 8 | bytes[2 * i + 1];
    img.depth[i] = static_cast<float>(value * 1e-3);  // millimeters to meters
  }
  return img;
}

}  // namespace granulab::camera
