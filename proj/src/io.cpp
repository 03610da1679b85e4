#include "depthscan/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ds {

namespace {

static_assert(std::endian::native == std::endian::little,
              "file I/O assumes a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("short write to " + path.string());
}

// Header tokenizer for PNM-family files: whitespace-separated tokens with
// '#' comments running to end of line. Tracks the byte offset for errors.
class HeaderScanner {
 public:
  HeaderScanner(const std::string& bytes, std::string file)
      : bytes_(bytes), file_(std::move(file)) {}

  std::string next_token() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) {
      throw ParseError(file_ + ": unexpected end of header", pos_);
    }
    token_at_ = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    return bytes_.substr(token_at_, pos_ - token_at_);
  }

  int next_int(const char* what) {
    const std::string tok = next_token();
    const std::size_t at = token_at_;
    try {
      std::size_t used = 0;
      const int value = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return value;
    } catch (const std::exception&) {
      throw ParseError(file_ + ": expected integer " + what + ", got '" + tok + "'", at);
    }
  }

  double next_double(const char* what) {
    const std::string tok = next_token();
    const std::size_t at = token_at_;
    try {
      std::size_t used = 0;
      const double value = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return value;
    } catch (const std::exception&) {
      throw ParseError(file_ + ": expected number " + what + ", got '" + tok + "'", at);
    }
  }

  // Consumes exactly one whitespace byte: the separator before binary data.
  std::size_t binary_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError(file_ + ": missing separator before binary data", pos_);
    }
    return ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::string file_;
  std::size_t pos_ = 0;
  std::size_t token_at_ = 0;
};

void append_le_float(std::string& out, float f) {
  char raw[4];
  std::memcpy(raw, &f, 4);
  out.append(raw, 4);
}

float take_le_float(const std::string& bytes, std::size_t offset, bool swap) {
  char raw[4];
  std::memcpy(raw, bytes.data() + offset, 4);
  if (swap) std::swap(raw[0], raw[3]), std::swap(raw[1], raw[2]);
  float f;
  std::memcpy(&f, raw, 4);
  return f;
}

std::string pfm_header(const char* magic, int width, int height, const std::string& comment) {
  std::string out = magic;
  out += "\n";
  if (!comment.empty()) out += "# " + comment + "\n";
  out += std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
  return out;
}

// Shared PFM reader; channels is 1 (Pf) or 3 (PF).
std::vector<float> read_pfm_payload(const std::string& bytes, const std::string& name,
                                    int expect_channels, int& width, int& height) {
  HeaderScanner scan(bytes, name);
  const std::size_t magic_at = scan.pos();
  const std::string magic = scan.next_token();
  const int channels = magic == "PF" ? 3 : (magic == "Pf" ? 1 : 0);
  if (channels == 0) throw ParseError(name + ": not a PFM file (magic '" + magic + "')", magic_at);
  if (channels != expect_channels) {
    throw ParseError(name + ": expected " + std::to_string(expect_channels) +
                         "-channel PFM, found '" + magic + "'",
                     magic_at);
  }
  width = scan.next_int("width");
  height = scan.next_int("height");
  if (width <= 0 || height <= 0) {
    throw ParseError(name + ": non-positive image dimensions", scan.pos());
  }
  const std::size_t scale_at = scan.pos();
  const double scale = scan.next_double("scale");
  if (scale == 0.0) throw ParseError(name + ": zero scale", scale_at);
  const bool swap = scale > 0.0;  // positive scale marks big-endian storage

  const std::size_t data_at = scan.binary_start();
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - data_at < count * 4) {
    throw ParseError(name + ": truncated pixel data", bytes.size());
  }

  std::vector<float> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = take_le_float(bytes, data_at + 4 * i, swap);
    if (!std::isfinite(samples[i])) {
      throw ValidationError(name + ": non-finite sample at index " + std::to_string(i));
    }
  }
  return samples;
}

void check_finite(double value, const std::filesystem::path& path) {
  if (!std::isfinite(value)) {
    throw ValidationError(path.string() + ": refusing to write non-finite sample");
  }
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const Grid<double>& grid,
               const std::string& comment) {
  std::string out = pfm_header("Pf", grid.width(), grid.height(), comment);
  out.reserve(out.size() + grid.size() * 4);
  for (int v = grid.height() - 1; v >= 0; --v) {  // PFM rows run bottom-up
    for (int u = 0; u < grid.width(); ++u) {
      check_finite(grid(u, v), path);
      append_le_float(out, static_cast<float>(grid(u, v)));
    }
  }
  write_file(path, out);
}

Grid<double> read_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  int width = 0, height = 0;
  const auto samples = read_pfm_payload(bytes, path.string(), 1, width, height);
  Grid<double> grid(width, height, 0.0);
  std::size_t i = 0;
  for (int v = height - 1; v >= 0; --v) {
    for (int u = 0; u < width; ++u) grid(u, v) = samples[i++];
  }
  return grid;
}

void write_pfm3(const std::filesystem::path& path, const Grid<Eigen::Vector3d>& grid,
                const std::string& comment) {
  std::string out = pfm_header("PF", grid.width(), grid.height(), comment);
  out.reserve(out.size() + grid.size() * 12);
  for (int v = grid.height() - 1; v >= 0; --v) {
    for (int u = 0; u < grid.width(); ++u) {
      for (int k = 0; k < 3; ++k) {
        check_finite(grid(u, v)[k], path);
        append_le_float(out, static_cast<float>(grid(u, v)[k]));
      }
    }
  }
  write_file(path, out);
}

Grid<Eigen::Vector3d> read_pfm3(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  int width = 0, height = 0;
  const auto samples = read_pfm_payload(bytes, path.string(), 3, width, height);
  Grid<Eigen::Vector3d> grid(width, height, Eigen::Vector3d::Zero());
  std::size_t i = 0;
  for (int v = height - 1; v >= 0; --v) {
    for (int u = 0; u < width; ++u) {
      grid(u, v) = Eigen::Vector3d(samples[i], samples[i + 1], samples[i + 2]);
      i += 3;
    }
  }
  return grid;
}

void write_pgm_mask(const std::filesystem::path& path, const Mask& mask) {
  std::string out = "P5\n# validity mask: 255 = valid\n" + std::to_string(mask.width()) + " " +
                    std::to_string(mask.height()) + "\n255\n";
  out.reserve(out.size() + mask.size());
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) out.push_back(mask(u, v) ? '\xff' : '\0');
  }
  write_file(path, out);
}

Mask read_pgm_mask(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  HeaderScanner scan(bytes, path.string());
  const std::size_t magic_at = scan.pos();
  const std::string magic = scan.next_token();
  if (magic != "P5") throw ParseError(path.string() + ": not a binary PGM", magic_at);
  const int width = scan.next_int("width");
  const int height = scan.next_int("height");
  const std::size_t maxval_at = scan.pos();
  const int maxval = scan.next_int("maxval");
  if (width <= 0 || height <= 0) {
    throw ParseError(path.string() + ": non-positive image dimensions", maxval_at);
  }
  if (maxval <= 0 || maxval > 255) {
    throw ParseError(path.string() + ": unsupported maxval " + std::to_string(maxval), maxval_at);
  }
  const std::size_t data_at = scan.binary_start();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - data_at < count) {
    throw ParseError(path.string() + ": truncated pixel data", bytes.size());
  }
  Mask mask(width, height, 0);
  std::size_t i = data_at;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      mask(u, v) = static_cast<unsigned char>(bytes[i++]) ? 1 : 0;
    }
  }
  return mask;
}

void write_depth(const std::filesystem::path& pfm_path, const std::filesystem::path& mask_path,
                 const DepthMap& depth) {
  write_pfm(pfm_path, depth.values, "depth in meters, positive along the camera +z axis");
  write_pgm_mask(mask_path, depth.mask);
}

DepthMap read_depth(const std::filesystem::path& pfm_path,
                    const std::filesystem::path& mask_path) {
  Grid<double> values = read_pfm(pfm_path);
  Mask mask = read_pgm_mask(mask_path);
  if (!values.same_size(mask)) {
    throw ValidationError(pfm_path.string() + " and " + mask_path.string() +
                          " have mismatched dimensions");
  }
  return DepthMap(std::move(values), std::move(mask));
}

void write_normals(const std::filesystem::path& pfm_path,
                   const std::filesystem::path& mask_path, const NormalMap& normals) {
  write_pfm3(pfm_path, normals.values, "unit normals, camera frame, oriented toward the camera");
  write_pgm_mask(mask_path, normals.mask);
}

NormalMap read_normals(const std::filesystem::path& pfm_path,
                       const std::filesystem::path& mask_path) {
  Grid<Eigen::Vector3d> values = read_pfm3(pfm_path);
  Mask mask = read_pgm_mask(mask_path);
  if (!values.same_size(mask)) {
    throw ValidationError(pfm_path.string() + " and " + mask_path.string() +
                          " have mismatched dimensions");
  }
  return NormalMap(std::move(values), std::move(mask));
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::string out;
  char line[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += line;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(line, sizeof(line), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += line;
  }
  write_file(path, out);
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  TriangleMesh mesh;
  std::size_t line_start = 0;
  while (line_start < bytes.size()) {
    std::size_t line_end = bytes.find('\n', line_start);
    if (line_end == std::string::npos) line_end = bytes.size();
    const std::string line = bytes.substr(line_start, line_end - line_start);
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw ParseError(path.string() + ": malformed vertex line", line_start);
      }
      mesh.vertices.push_back(v);
      mesh.source.push_back(Side::front);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string field;
      while (ls >> field) {
        // "i", "i/t", "i/t/n" forms; only the vertex index matters here.
        const std::string head = field.substr(0, field.find('/'));
        int i = 0;
        try {
          i = std::stoi(head);
        } catch (const std::exception&) {
          throw ParseError(path.string() + ": malformed face index '" + field + "'", line_start);
        }
        if (i < 0) i = static_cast<int>(mesh.vertices.size()) + i + 1;
        if (i < 1 || i > static_cast<int>(mesh.vertices.size())) {
          throw ParseError(path.string() + ": face index out of range", line_start);
        }
        idx.push_back(i - 1);
      }
      if (idx.size() < 3) {
        throw ParseError(path.string() + ": face with fewer than 3 vertices", line_start);
      }
      for (std::size_t k = 2; k < idx.size(); ++k) {
        mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
      }
    }
    line_start = line_end + 1;
  }
  return mesh;
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::string out =
      "ply\nformat binary_little_endian 1.0\n"
      "comment units meters, camera frame (+z forward, -y up)\n"
      "element vertex " + std::to_string(mesh.vertex_count()) + "\n"
      "property double x\nproperty double y\nproperty double z\n"
      "property uchar side\n"
      "element face " + std::to_string(mesh.triangle_count()) + "\n"
      "property list uchar int vertex_indices\nend_header\n";
  out.reserve(out.size() + mesh.vertex_count() * 25 + mesh.triangle_count() * 13);
  char raw[8];
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double value = mesh.vertices[i][k];
      std::memcpy(raw, &value, 8);
      out.append(raw, 8);
    }
    out.push_back(i < mesh.source.size() && mesh.source[i] == Side::back ? '\1' : '\0');
  }
  for (const auto& t : mesh.triangles) {
    out.push_back('\3');
    for (int k = 0; k < 3; ++k) {
      const std::int32_t idx = t[k];
      std::memcpy(raw, &idx, 4);
      out.append(raw, 4);
    }
  }
  write_file(path, out);
}

namespace {

struct PlyProperty {
  std::string name;
  int size = 0;       // bytes
  bool is_float = false;
  bool is_double = false;
};

int ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64") return 8;
  return 0;
}

}  // namespace

TriangleMesh read_ply(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();

  // --- header ---
  std::size_t pos = 0;
  auto next_line = [&]() {
    if (pos >= bytes.size()) throw ParseError(name + ": unexpected end of header", pos);
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) throw ParseError(name + ": unterminated header line", pos);
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  if (next_line() != "ply") throw ParseError(name + ": missing 'ply' magic", 0);
  bool fmt_seen = false;
  long n_vertices = -1, n_faces = -1;
  std::vector<PlyProperty> vertex_props;
  int face_count_size = 0, face_index_size = 0;
  std::string element;

  while (true) {
    const std::size_t line_at = pos;
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "end_header") break;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian") {
        throw ParseError(name + ": unsupported PLY format '" + fmt + "'", line_at);
      }
      fmt_seen = true;
    } else if (tag == "element") {
      long count = 0;
      ls >> element >> count;
      if (element == "vertex") {
        n_vertices = count;
      } else if (element == "face") {
        n_faces = count;
      } else {
        throw ParseError(name + ": unsupported element '" + element + "'", line_at);
      }
    } else if (tag == "property") {
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, index_type, prop_name;
        ls >> count_type >> index_type >> prop_name;
        if (element != "face" || (prop_name != "vertex_indices" && prop_name != "vertex_index")) {
          throw ParseError(name + ": unsupported list property '" + prop_name + "'", line_at);
        }
        face_count_size = ply_type_size(count_type);
        face_index_size = ply_type_size(index_type);
        if (face_count_size == 0 || face_index_size == 0 || face_index_size > 4) {
          throw ParseError(name + ": unsupported face index types", line_at);
        }
      } else if (element == "vertex") {
        PlyProperty prop;
        prop.size = ply_type_size(type);
        prop.is_float = type == "float" || type == "float32";
        prop.is_double = type == "double" || type == "float64";
        ls >> prop.name;
        if (prop.size == 0) {
          throw ParseError(name + ": unsupported property type '" + type + "'", line_at);
        }
        vertex_props.push_back(prop);
      } else {
        // Any other scalar property would misalign the binary payload.
        throw ParseError(name + ": unsupported property outside the vertex element", line_at);
      }
    } else {
      throw ParseError(name + ": unexpected header line '" + line + "'", line_at);
    }
  }

  if (!fmt_seen) throw ParseError(name + ": missing format line", pos);
  if (n_vertices < 0) throw ParseError(name + ": missing vertex element", pos);
  if (n_faces < 0) n_faces = 0;
  if (n_faces > 0 && (face_count_size == 0 || face_index_size == 0)) {
    throw ParseError(name + ": face element without vertex_indices property", pos);
  }

  auto take = [&](void* dst, std::size_t n) {
    if (bytes.size() - pos < n) throw ParseError(name + ": truncated binary payload", bytes.size());
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };

  TriangleMesh mesh;
  mesh.vertices.reserve(n_vertices);
  mesh.source.reserve(n_vertices);
  for (long i = 0; i < n_vertices; ++i) {
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Side side = Side::front;
    for (const auto& prop : vertex_props) {
      double value = 0.0;
      if (prop.is_double) {
        take(&value, 8);
      } else if (prop.is_float) {
        float f;
        take(&f, 4);
        value = f;
      } else {
        std::uint64_t raw = 0;
        take(&raw, prop.size);
        value = static_cast<double>(raw & ((prop.size == 8) ? ~0ull : ((1ull << (8 * prop.size)) - 1)));
      }
      if (prop.name == "x") v.x() = value;
      else if (prop.name == "y") v.y() = value;
      else if (prop.name == "z") v.z() = value;
      else if (prop.name == "side") side = value != 0.0 ? Side::back : Side::front;
    }
    mesh.vertices.push_back(v);
    mesh.source.push_back(side);
  }

  for (long f = 0; f < n_faces; ++f) {
    std::uint64_t count = 0;
    take(&count, face_count_size);
    if (count < 3) throw ParseError(name + ": face with fewer than 3 vertices", pos);
    std::vector<int> idx(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      std::int32_t i = 0;
      take(&i, face_index_size);
      if (i < 0 || i >= static_cast<std::int32_t>(mesh.vertices.size())) {
        throw ParseError(name + ": face index out of range", pos);
      }
      idx[k] = i;
    }
    for (std::uint64_t k = 2; k < count; ++k) {
      mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
    }
  }
  return mesh;
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") {
    write_obj(path, mesh);
  } else if (ext == ".ply") {
    write_ply(path, mesh);
  } else {
    throw ContractViolation("write_mesh: unsupported extension '" + ext + "'");
  }
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw ContractViolation("read_mesh: unsupported extension '" + ext + "'");
}

}  // namespace ds
