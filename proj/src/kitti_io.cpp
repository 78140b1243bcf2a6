#include "pseudolabel/kitti_io.hpp"

#include "pseudolabel/errors.hpp"

#include <algorithm>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace pseudolabel {

namespace {

constexpr std::size_t kScanRecordBytes = 16;
constexpr double kMinForwardDepth = 0.1;

float load_f32_le(const std::byte* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits & 0xff0000u) >> 8) | (bits >> 24);
  }
  return std::bit_cast<float>(bits);
}

void store_f32_le(float value, std::byte* p) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits & 0xff0000u) >> 8) | (bits >> 24);
  }
  std::memcpy(p, &bits, 4);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view token, int line_no) {
  double value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("non-numeric token '" + std::string(token) + "'", line_no);
  }
  return value;
}

template <typename F>
void for_each_line(std::string_view text, F&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  // avoid "-0.00"
  if (std::strcmp(buf, "-0.00") == 0) return "0.00";
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- scans

PointCloud read_scan(std::span<const std::byte> bytes) {
  if (bytes.size() % kScanRecordBytes != 0) {
    throw FormatError("scan length not multiple of 16: " + std::to_string(bytes.size()) + " bytes");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / kScanRecordBytes;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* rec = bytes.data() + i * kScanRecordBytes;
    cloud.points.emplace_back(load_f32_le(rec), load_f32_le(rec + 4), load_f32_le(rec + 8));
  }
  return cloud;
}

std::vector<std::byte> write_scan(const PointCloud& cloud) {
  std::vector<std::byte> out(cloud.size() * kScanRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::byte* rec = out.data() + i * kScanRecordBytes;
    const auto& p = cloud.points[i];
    store_f32_le(static_cast<float>(p.x()), rec);
    store_f32_le(static_cast<float>(p.y()), rec + 4);
    store_f32_le(static_cast<float>(p.z()), rec + 8);
    store_f32_le(0.0f, rec + 12);
  }
  return out;
}

// ---------------------------------------------------------- calibration

Calibration read_calibration(std::string_view text) {
  std::map<std::string, std::vector<double>, std::less<>> values;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      if (!split_ws(line).empty()) throw ParseError("expected 'KEY: values'", line_no);
      return;
    }
    const auto key_tokens = split_ws(line.substr(0, colon));
    if (key_tokens.size() != 1) throw ParseError("malformed key", line_no);
    std::vector<double> nums;
    for (auto tok : split_ws(line.substr(colon + 1))) nums.push_back(parse_double(tok, line_no));
    values[std::string(key_tokens[0])] = std::move(nums);
  });

  auto get = [&](const char* key, std::size_t count) -> const std::vector<double>& {
    auto it = values.find(key);
    if (it == values.end()) throw MissingKeyError(key);
    if (it->second.size() != count) {
      throw FormatError(std::string(key) + " expects " + std::to_string(count) + " values, got " +
                        std::to_string(it->second.size()));
    }
    return it->second;
  };

  Calibration calib;
  const auto& p2 = get("P2", 12);
  const auto& r0 = get("R0_rect", 9);
  const auto& tr = get("Tr_velo_to_cam", 12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      calib.projection(r, c) = p2[r * 4 + c];
      calib.lidar_to_cam(r, c) = tr[r * 4 + c];
    }
    for (int c = 0; c < 3; ++c) calib.rectification(r, c) = r0[r * 3 + c];
  }
  return calib;
}

std::string write_calibration(const Calibration& calib) {
  std::ostringstream out;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.12e", v);
    out << buf;
  };
  out << "P2:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) put(calib.projection(r, c));
  out << "\nR0_rect:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) put(calib.rectification(r, c));
  out << "\nTr_velo_to_cam:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) put(calib.lidar_to_cam(r, c));
  out << "\n";
  return out.str();
}

RectifiedCloud lidar_to_rect(const PointCloud& cloud, const Calibration& calib) {
  const Mat4 t = calib.rectification * calib.lidar_to_cam;
  RectifiedCloud out;
  out.cloud.points.reserve(cloud.size());
  out.source_index.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 p = (t * cloud.points[i].homogeneous()).head<3>();
    if (p.z() <= kMinForwardDepth) continue;
    out.cloud.points.push_back(p);
    out.source_index.push_back(i);
  }
  return out;
}

// --------------------------------------------------------------- labels

double observation_angle(double rotation_y, const Point3& location) {
  return wrap_angle(rotation_y - std::atan2(location.x(), location.z()));
}

std::string write_labels(std::span<const LabelRecord> records) {
  std::string out;
  for (const auto& r : records) {
    const double alpha = observation_angle(r.rotation_y, r.location);
    out += r.type;
    out += ' ' + fmt2(r.truncation);
    out += ' ' + std::to_string(r.occlusion);
    out += ' ' + fmt2(alpha);
    for (double v : {r.box2d.u_min, r.box2d.v_min, r.box2d.u_max, r.box2d.v_max, r.h, r.w, r.l,
                     r.location.x(), r.location.y(), r.location.z(), r.rotation_y}) {
      out += ' ' + fmt2(v);
    }
    if (r.score) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %.4f", *r.score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<LabelRecord> read_labels(std::string_view text) {
  std::vector<LabelRecord> out;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok.size() != 15 && tok.size() != 16) {
      throw ParseError("expected 15 or 16 columns, got " + std::to_string(tok.size()), line_no);
    }
    LabelRecord r;
    r.type = std::string(tok[0]);
    r.truncation = parse_double(tok[1], line_no);
    r.occlusion = static_cast<int>(std::lround(parse_double(tok[2], line_no)));
    r.alpha = parse_double(tok[3], line_no);
    r.box2d = {parse_double(tok[4], line_no), parse_double(tok[5], line_no), parse_double(tok[6], line_no),
               parse_double(tok[7], line_no)};
    r.h = parse_double(tok[8], line_no);
    r.w = parse_double(tok[9], line_no);
    r.l = parse_double(tok[10], line_no);
    r.location = {parse_double(tok[11], line_no), parse_double(tok[12], line_no), parse_double(tok[13], line_no)};
    r.rotation_y = parse_double(tok[14], line_no);
    if (tok.size() == 16) r.score = parse_double(tok[15], line_no);
    out.push_back(std::move(r));
  });
  return out;
}

LabelRecord box3d_to_label(const Box3D& box, const Box2D& box2d, std::string type) {
  const Box3D b = box.canonical();
  LabelRecord r;
  r.type = std::move(type);
  r.box2d = box2d;
  r.h = b.height;
  r.w = b.width;
  r.l = b.length;
  r.location = b.center + Point3(0, b.height / 2, 0);
  // KITTI rotation_y turns +x towards -z, opposite to our yaw. Of the two
  // headings consistent with the footprint, keep the one whose observation
  // angle lies in [-pi/2, pi/2).
  double ry = wrap_angle(-b.yaw);
  const double alpha = observation_angle(ry, r.location);
  if (alpha >= std::numbers::pi / 2 || alpha < -std::numbers::pi / 2) ry = wrap_angle(ry + std::numbers::pi);
  r.rotation_y = ry;
  r.alpha = observation_angle(ry, r.location);
  return r;
}

Box3D label_to_box3d(const LabelRecord& record) {
  Box3D b;
  b.center = record.location - Point3(0, record.h / 2, 0);
  b.length = record.l;
  b.width = record.w;
  b.height = record.h;
  b.yaw = -record.rotation_y;
  return b.canonical();
}

// ---------------------------------------------------------------- files

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

FrameFiles frame_files(const std::filesystem::path& root, std::string_view frame_id) {
  const std::string id(frame_id);
  return {root / "velodyne" / (id + ".bin"), root / "calib" / (id + ".txt"), root / "label_2" / (id + ".txt")};
}

std::vector<std::string> list_frames(const std::filesystem::path& root) {
  std::vector<std::string> ids;
  const auto dir = root / "velodyne";
  if (!std::filesystem::is_directory(dir)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("short read on " + path.string());
  return bytes;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LoadedFrame load_frame(const std::filesystem::path& root, std::string_view frame_id) {
  const auto files = frame_files(root, frame_id);
  LoadedFrame frame;
  frame.scene.frame_id = std::string(frame_id);
  frame.scene.calib = read_calibration(read_text_file(files.calib));
  const PointCloud raw = read_scan(read_binary_file(files.scan));
  frame.scene.cloud = lidar_to_rect(raw, frame.scene.calib).cloud;
  if (std::filesystem::exists(files.labels)) {
    frame.labels = read_labels(read_text_file(files.labels));
    for (std::size_t i = 0; i < frame.labels.size(); ++i) {
      const auto& rec = frame.labels[i];
      if (rec.box2d.valid()) frame.scene.boxes2d.push_back({rec.box2d, rec.type, i, rec.truncation, rec.occlusion});
    }
  }
  return frame;
}

}  // namespace pseudolabel
