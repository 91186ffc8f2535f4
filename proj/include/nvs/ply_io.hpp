#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nvs/errors.hpp"
#include "nvs/warp.hpp"

namespace nvs {

// Binary little-endian PLY, float32 x/y/z plus uchar red/green/blue. The
// reader tolerates extra vertex properties and any property order.
inline void save_ply(const std::vector<ColoredPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n"
         "property uchar green\nproperty uchar blue\nend_header\n";
  std::vector<unsigned char> rec(15);
  for (const ColoredPoint& p : points) {
    for (int k = 0; k < 3; ++k) {
      float f = static_cast<float>(p.position[k]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      rec[k * 4 + 0] = static_cast<unsigned char>(bits);
      rec[k * 4 + 1] = static_cast<unsigned char>(bits >> 8);
      rec[k * 4 + 2] = static_cast<unsigned char>(bits >> 16);
      rec[k * 4 + 3] = static_cast<unsigned char>(bits >> 24);
    }
    for (int k = 0; k < 3; ++k)
      rec[12 + k] =
          static_cast<unsigned char>(std::lround(std::clamp(p.color[k], 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
  if (!out) throw IoFailure("short write to " + path.string());
}

inline std::vector<ColoredPoint> load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
    throw BadHeader("not a PLY: " + path.string());

  struct Prop {
    std::string name;
    int size = 0;
  };
  std::vector<Prop> props;
  std::size_t vertex_count = 0;
  bool is_le = false;
  bool in_vertex = false;
  auto prop_size = [](const std::string& t) -> int {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" ||
        t == "float32")
      return 4;
    if (t == "double" || t == "float64") return 8;
    return 0;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      is_le = fmt == "binary_little_endian";
      if (!is_le) throw BadHeader("unsupported PLY format in " + path.string());
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
      else if (count > 0)
        throw BadHeader("unsupported PLY element '" + name + "' in " + path.string());
    } else if (tok == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ls >> type >> name;
      int size = prop_size(type);
      if (size == 0) throw BadHeader("unsupported PLY property type in " + path.string());
      props.push_back({name, size});
    } else if (tok == "end_header") {
      break;
    } else if (tok.empty()) {
      continue;
    } else {
      throw BadHeader("unexpected PLY header line '" + line + "' in " + path.string());
    }
  }

  int stride = 0;
  int off_xyz[3] = {-1, -1, -1};
  int off_rgb[3] = {-1, -1, -1};
  int size_rgb[3] = {0, 0, 0};
  for (const Prop& p : props) {
    if (p.name == "x") off_xyz[0] = stride;
    if (p.name == "y") off_xyz[1] = stride;
    if (p.name == "z") off_xyz[2] = stride;
    if (p.name == "red") off_rgb[0] = stride, size_rgb[0] = p.size;
    if (p.name == "green") off_rgb[1] = stride, size_rgb[1] = p.size;
    if (p.name == "blue") off_rgb[2] = stride, size_rgb[2] = p.size;
    stride += p.size;
  }
  for (int k = 0; k < 3; ++k)
    if (off_xyz[k] < 0 || off_rgb[k] < 0 || size_rgb[k] != 1)
      throw BadHeader("PLY lacks float x/y/z + uchar red/green/blue: " + path.string());

  std::vector<unsigned char> body(vertex_count * static_cast<std::size_t>(stride));
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size())
    throw BadHeader("truncated PLY body: " + path.string());

  std::vector<ColoredPoint> points(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const unsigned char* rec = body.data() + i * stride;
    ColoredPoint& p = points[i];
    for (int k = 0; k < 3; ++k) {
      std::uint32_t bits = std::uint32_t(rec[off_xyz[k]]) |
                           std::uint32_t(rec[off_xyz[k] + 1]) << 8 |
                           std::uint32_t(rec[off_xyz[k] + 2]) << 16 |
                           std::uint32_t(rec[off_xyz[k] + 3]) << 24;
      float f;
      std::memcpy(&f, &bits, 4);
      p.position[k] = f;
      p.color[k] = rec[off_rgb[k]] / 255.0;
    }
    if (!p.position.allFinite())
      throw BadHeader("non-finite vertex in " + path.string());
  }
  return points;
}

}  // namespace nvs
