#include "pseudolabel/synth.hpp"

#include "pseudolabel/errors.hpp"
#include "pseudolabel/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pseudolabel {

namespace {

struct FaceName {
  Face face;
  const char* name;
};
constexpr FaceName kFaceNames[] = {
    {kFaceLeft, "left"}, {kFaceRight, "right"}, {kFaceFront, "front"}, {kFaceBack, "back"}, {kFaceTop, "top"}};

Vec3 length_axis(const Box3D& b) { return {std::cos(b.yaw), 0.0, std::sin(b.yaw)}; }
Vec3 width_axis(const Box3D& b) { return {-std::sin(b.yaw), 0.0, std::cos(b.yaw)}; }

// Rectangular patch: origin + a * axis_a + b * axis_b, a in [0, len_a], b in [0, len_b].
struct Patch {
  Vec3 origin, axis_a, axis_b;
  double len_a, len_b;
  Vec3 outward;
};

Patch face_patch(const Box3D& box, Face face) {
  const Vec3 d = length_axis(box), n = width_axis(box), up(0, -1, 0);
  const double hl = box.length / 2, hw = box.width / 2, hh = box.height / 2;
  const Vec3& c = box.center;
  switch (face) {
    case kFaceFront: return {c + d * hl - n * hw + up * (-hh), n, up, box.width, box.height, d};
    case kFaceBack: return {c - d * hl - n * hw + up * (-hh), n, up, box.width, box.height, -d};
    case kFaceLeft: return {c + n * hw - d * hl + up * (-hh), d, up, box.length, box.height, n};
    case kFaceRight: return {c - n * hw - d * hl + up * (-hh), d, up, box.length, box.height, -n};
    case kFaceTop: return {c + up * hh - d * hl - n * hw, d, n, box.length, box.width, up};
  }
  throw std::logic_error("unknown face");
}

std::vector<double> grid_steps(double extent, double spacing) {
  const int intervals = std::max(1, static_cast<int>(std::ceil(extent / spacing - 1e-9)));
  std::vector<double> out(intervals + 1);
  for (int i = 0; i <= intervals; ++i) out[i] = extent * i / intervals;
  return out;
}

// Segment eye -> p passes through the (slightly shrunk) box before reaching p.
bool segment_hits_box(const Point3& eye, const Point3& p, const Box3D& box) {
  const Vec3 d = length_axis(box), n = width_axis(box);
  auto local = [&](const Point3& q) {
    const Vec3 r = q - box.center;
    return Vec3(r.dot(d), r.y(), r.dot(n));
  };
  const Vec3 a = local(eye), b = local(p);
  const Vec3 half(box.length / 2 - 1e-6, box.height / 2 - 1e-6, box.width / 2 - 1e-6);
  double t0 = 0, t1 = 1 - 1e-9;
  for (int k = 0; k < 3; ++k) {
    const double delta = b[k] - a[k];
    if (std::abs(delta) < 1e-15) {
      if (a[k] < -half[k] || a[k] > half[k]) return false;
      continue;
    }
    double ta = (-half[k] - a[k]) / delta, tb = (half[k] - a[k]) / delta;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

Box2D project_box(const Box3D& box, const Calibration& calib) {
  Box2D b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : box.corners()) {
    if (c.z() <= 0.1) throw std::invalid_argument("vehicle corner behind the camera");
    const Pixel px = project_to_image(c, calib);
    b.u_min = std::min(b.u_min, px.u);
    b.v_min = std::min(b.v_min, px.v);
    b.u_max = std::max(b.u_max, px.u);
    b.v_max = std::max(b.v_max, px.v);
  }
  return b;
}

bool inside_image(const Box2D& b, const SynthSpec& spec, double margin = 0) {
  return b.u_min >= margin && b.v_min >= margin && b.u_max <= spec.image_width - margin &&
         b.v_max <= spec.image_height - margin;
}

}  // namespace

unsigned parse_faces(std::string_view text) {
  unsigned faces = 0;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t j = text.find(',', i);
    if (j == std::string_view::npos) j = text.size();
    const auto tok = text.substr(i, j - i);
    if (!tok.empty()) {
      bool found = false;
      for (const auto& f : kFaceNames) {
        if (tok == f.name) {
          faces |= f.face;
          found = true;
        }
      }
      if (!found) throw std::invalid_argument("unknown face '" + std::string(tok) + "'");
    }
    i = j + 1;
  }
  return faces;
}

std::string format_faces(unsigned faces) {
  std::string out;
  for (const auto& f : kFaceNames) {
    if (faces & f.face) {
      if (!out.empty()) out += ',';
      out += f.name;
    }
  }
  return out;
}

unsigned faces_seen_from(const Box3D& box, const Point3& eye) {
  unsigned faces = 0;
  for (Face f : {kFaceLeft, kFaceRight, kFaceFront, kFaceBack}) {
    const Patch p = face_patch(box, f);
    const Vec3 center = p.origin + p.axis_a * (p.len_a / 2) + p.axis_b * (p.len_b / 2);
    const Vec3 to_eye = eye - center;
    if (p.outward.x() * to_eye.x() + p.outward.z() * to_eye.z() > 0) faces |= f;
  }
  return faces;
}

Calibration SynthSpec::default_calibration() {
  Calibration c;
  c.projection << 721.5377, 0, 609.5593, 44.85728, 0, 721.5377, 172.854, 0.2163791, 0, 0, 1, 0.002745884;
  c.lidar_to_cam << 0, -1, 0, 0, 0, 0, -1, -0.08, 1, 0, 0, -0.27, 0, 0, 0, 1;
  c.rectification = Mat4::Identity();
  return c;
}

void SynthSpec::validate() const {
  for (const auto& v : vehicles) {
    if (!(v.point_spacing > 0)) throw std::invalid_argument("vehicle point spacing must be > 0");
    if (!(v.box.length > 0 && v.box.width > 0 && v.box.height > 0)) {
      throw std::invalid_argument("vehicle dimensions must be > 0");
    }
    if (v.noise_sigma < 0 || v.outlier_count < 0) throw std::invalid_argument("negative noise or outlier count");
    if (!inside_image(project_box(v.box, calib), *this)) {
      throw std::invalid_argument("vehicle outside the camera field of view");
    }
  }
  if (ground_spacing < 0) throw std::invalid_argument("ground spacing must be >= 0");
}

SynthScene generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Raw {
    Point3 p;
    int label;
  };
  std::vector<Raw> raw;
  const Point3 eye = spec.calib.camera_center();

  for (std::size_t vi = 0; vi < spec.vehicles.size(); ++vi) {
    const auto& v = spec.vehicles[vi];
    for (const auto& fname : kFaceNames) {
      if (!(v.faces & fname.face)) continue;
      const Patch patch = face_patch(v.box, fname.face);
      for (double a : grid_steps(patch.len_a, v.point_spacing)) {
        for (double b : grid_steps(patch.len_b, v.point_spacing)) {
          Point3 p = patch.origin + patch.axis_a * a + patch.axis_b * b;
          if (v.noise_sigma > 0) {
            p += Vec3(unit_normal(rng), unit_normal(rng), unit_normal(rng)) * v.noise_sigma;
          }
          raw.push_back({p, static_cast<int>(vi)});
        }
      }
    }
    std::vector<Face> sides;
    for (Face f : {kFaceLeft, kFaceRight, kFaceFront, kFaceBack}) {
      if (v.faces & f) sides.push_back(f);
    }
    if (sides.empty() && (v.faces & kFaceTop)) sides.push_back(kFaceTop);
    Vec2 corner;
    {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& c : v.box.bev_corners()) {
        const double d = (c - bev_of(eye)).norm();
        if (d < best) best = d, corner = c;
      }
    }
    // Outliers continue a visible face past its far end (mirrors, hitches,
    // multipath), so they inflate the rectangle rather than tilt it.
    std::vector<Face> sides_only;
    for (Face f : sides) {
      if (f != kFaceTop) sides_only.push_back(f);
    }
    for (int k = 0; k < v.outlier_count && !sides_only.empty(); ++k) {
      for (int tries = 0; tries < 64; ++tries) {
        const Patch patch =
            face_patch(v.box, sides_only[static_cast<std::size_t>(unit(rng) * sides_only.size()) % sides_only.size()]);
        const Point3 end0 = patch.origin, end1 = patch.origin + patch.axis_a * patch.len_a;
        const bool far1 = (bev_of(end1) - corner).norm() > (bev_of(end0) - corner).norm();
        const Vec3 away = far1 ? Vec3(patch.axis_a) : Vec3(-patch.axis_a);
        const double gap = v.outlier_gap_min + unit(rng) * (v.outlier_gap_max - v.outlier_gap_min);
        const Point3 p = (far1 ? end1 : end0) + away * gap + patch.axis_b * (unit(rng) * patch.len_b) +
                         patch.outward * (0.1 * unit(rng));
        const double d = (bev_of(p) - corner).norm();
        if (d < v.outlier_corner_min || d > v.outlier_corner_max) continue;
        raw.push_back({p, kLabelOutlier});
        break;
      }
    }
  }

  if (spec.ground_spacing > 0) {
    for (double x : grid_steps(spec.ground_x_max - spec.ground_x_min, spec.ground_spacing)) {
      for (double z : grid_steps(spec.ground_z_max - spec.ground_z_min, spec.ground_spacing)) {
        const double y = spec.ground_y + (spec.ground_noise > 0 ? unit_normal(rng) * spec.ground_noise : 0.0);
        raw.push_back({Point3(spec.ground_x_min + x, y, spec.ground_z_min + z), kLabelGround});
      }
    }
  }

  std::vector<const Box3D*> blockers;
  std::vector<int> blocker_owner;
  if (spec.vehicles_occlude) {
    for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
      blockers.push_back(&spec.vehicles[i].box);
      blocker_owner.push_back(static_cast<int>(i));
    }
  }
  for (const auto& o : spec.occluders) {
    blockers.push_back(&o);
    blocker_owner.push_back(-100);
  }

  SynthScene out;
  out.sampled_points.assign(spec.vehicles.size(), 0);
  out.visible_points.assign(spec.vehicles.size(), 0);
  for (const auto& r : raw) {
    if (r.label >= 0) ++out.sampled_points[r.label];
    bool hidden = r.p.z() <= 0.1;
    for (std::size_t b = 0; b < blockers.size() && !hidden; ++b) {
      if (r.label >= 0 && blocker_owner[b] == r.label) continue;
      hidden = segment_hits_box(eye, r.p, *blockers[b]);
    }
    if (hidden) continue;
    if (r.label >= 0) ++out.visible_points[r.label];
    out.scene.cloud.points.push_back(r.p);
    out.point_labels.push_back(r.label);
  }

  // Corner box grown to cover the vehicle's own noisy samples, so every
  // vehicle point projects inside its 2D box.
  std::vector<Box2D> boxes;
  for (const auto& v : spec.vehicles) boxes.push_back(project_box(v.box, spec.calib));
  for (const auto& r : raw) {
    if (r.label < 0 || r.p.z() <= 0.1) continue;
    const Pixel px = project_to_image(r.p, spec.calib);
    Box2D& b = boxes[r.label];
    b.u_min = std::min(b.u_min, px.u);
    b.v_min = std::min(b.v_min, px.v);
    b.u_max = std::max(b.u_max, px.u);
    b.v_max = std::max(b.v_max, px.v);
  }

  out.scene.frame_id = "000000";
  out.scene.calib = spec.calib;
  for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
    const auto& v = spec.vehicles[i];
    out.gt.push_back(v.box.canonical());
    TaggedBox2D tb;
    tb.box = boxes[i];
    tb.type = "Car";
    tb.source_index = i;
    out.occluded_fraction.push_back(
        out.sampled_points[i] ? 1.0 - static_cast<double>(out.visible_points[i]) / out.sampled_points[i] : 0.0);
    tb.occlusion = out.occluded_fraction[i] == 0 ? 0 : (out.occluded_fraction[i] < 0.3 ? 1 : 2);
    out.scene.boxes2d.push_back(tb);
  }
  return out;
}

namespace {

// Side faces whose normal is more than min_deg away from grazing, seen from eye.
int side_faces_in_view(const Box3D& box, const Point3& eye, double min_deg) {
  const double min_sin = std::sin(min_deg * std::numbers::pi / 180.0);
  int n = 0;
  for (Face f : {kFaceLeft, kFaceRight, kFaceFront, kFaceBack}) {
    const Patch patch = face_patch(box, f);
    const Point3 mid = patch.origin + patch.axis_a * (patch.len_a / 2) + patch.axis_b * (patch.len_b / 2);
    const Vec2 to_eye = (bev_of(eye) - bev_of(mid)).normalized();
    if (bev_of(patch.outward).normalized().dot(to_eye) >= min_sin) ++n;
  }
  return n;
}

}  // namespace

SynthSpec random_scene(std::uint64_t seed, const RandomSceneOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    SynthSpec spec;
    spec.seed = rng();
    const Point3 eye = spec.calib.camera_center();
    const int n = options.min_vehicles +
                  static_cast<int>(unit(rng) * (options.max_vehicles - options.min_vehicles + 1)) %
                      (options.max_vehicles - options.min_vehicles + 1);
    for (int i = 0; i < n; ++i) {
      for (int tries = 0; tries < 200; ++tries) {
        SynthVehicle v;
        const double z = uniform(8.0, 35.0);
        v.box.length = uniform(3.5, 4.8);
        v.box.width = uniform(1.5, 1.9);
        v.box.height = uniform(1.4, 1.7);
        v.box.center = Point3(uniform(-0.5, 0.5) * z, spec.ground_y - v.box.height / 2, z);
        v.box.yaw = uniform(-std::numbers::pi, std::numbers::pi);
        v.box = v.box.canonical();
        if (!inside_image(project_box(v.box, spec.calib), spec, 5.0)) continue;
        Box3D inflated = v.box;
        inflated.length += options.min_gap;
        inflated.width += options.min_gap;
        bool clash = false;
        for (const auto& other : spec.vehicles) {
          Box3D o = other.box;
          o.length += options.min_gap;
          o.width += options.min_gap;
          const auto ca = inflated.bev_corners();
          const auto cb = o.bev_corners();
          if (convex_polygon_intersection_area(ca, cb) > 0) clash = true;
        }
        if (clash) continue;
        v.faces = faces_seen_from(v.box, eye);
        if (side_faces_in_view(v.box, eye, options.min_view_angle_deg) < 2) continue;
        if (unit(rng) < options.top_probability) v.faces |= kFaceTop;
        v.point_spacing = std::clamp(z * options.spacing_per_meter * uniform(options.spacing_spread_min, options.spacing_spread_max), options.min_spacing,
                                     options.max_spacing);
        v.noise_sigma = uniform(0.0, 0.015);
        if (unit(rng) < options.outlier_probability) {
          v.outlier_count = 1 + static_cast<int>(unit(rng) * options.max_outliers) % options.max_outliers;
        }
        spec.vehicles.push_back(v);
        break;
      }
    }
    if (static_cast<int>(spec.vehicles.size()) < options.min_vehicles) continue;
    const SynthScene scene = generate(spec);
    const bool ok = std::all_of(scene.occluded_fraction.begin(), scene.occluded_fraction.end(),
                                [&](double f) { return f <= options.max_occlusion; });
    if (ok) return spec;
  }
  throw std::runtime_error("could not sample a scene within the occlusion limit");
}

// ------------------------------------------------------------ spec files

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec;
  auto box_from = [](const std::vector<double>& v, std::size_t at) {
    Box3D b;
    b.center = Point3(v[at], v[at + 1], v[at + 2]);
    b.length = v[at + 3];
    b.width = v[at + 4];
    b.height = v[at + 5];
    b.yaw = v[at + 6];
    return b.canonical();
  };
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "seed") {
      spec.seed = parse_uint(value);
    } else if (key == "ground_y") {
      spec.ground_y = parse_number(value);
    } else if (key == "ground_extent") {
      const auto v = parse_number_list(value);
      if (v.size() != 4) throw std::invalid_argument("ground_extent expects x_min x_max z_min z_max");
      spec.ground_x_min = v[0];
      spec.ground_x_max = v[1];
      spec.ground_z_min = v[2];
      spec.ground_z_max = v[3];
    } else if (key == "ground_spacing") {
      spec.ground_spacing = parse_number(value);
    } else if (key == "ground_noise") {
      spec.ground_noise = parse_number(value);
    } else if (key == "vehicles_occlude") {
      spec.vehicles_occlude = parse_bool(value);
    } else if (key == "image_size") {
      const auto v = parse_number_list(value);
      if (v.size() != 2) throw std::invalid_argument("image_size expects width height");
      spec.image_width = v[0];
      spec.image_height = v[1];
    } else if (key == "vehicle") {
      // x y z length width height yaw [faces [spacing [noise [outliers]]]]
      std::istringstream in(value);
      std::vector<std::string> tok;
      for (std::string t; in >> t;) tok.push_back(t);
      if (tok.size() < 7) throw std::invalid_argument("vehicle expects at least x y z length width height yaw");
      std::vector<double> nums;
      for (int i = 0; i < 7; ++i) nums.push_back(parse_number(tok[i]));
      SynthVehicle v;
      v.box = box_from(nums, 0);
      if (tok.size() > 7) v.faces = parse_faces(tok[7]);
      if (tok.size() > 8) v.point_spacing = parse_number(tok[8]);
      if (tok.size() > 9) v.noise_sigma = parse_number(tok[9]);
      if (tok.size() > 10) v.outlier_count = static_cast<int>(parse_number(tok[10]));
      spec.vehicles.push_back(v);
    } else if (key == "occluder") {
      const auto v = parse_number_list(value);
      if (v.size() != 7) throw std::invalid_argument("occluder expects x y z length width height yaw");
      spec.occluders.push_back(box_from(v, 0));
    } else {
      throw std::invalid_argument("unknown synth key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string format_synth_spec(const SynthSpec& spec) {
  std::ostringstream out;
  const auto num = format_number;
  out << "seed = " << spec.seed << "\n";
  out << "ground_y = " << num(spec.ground_y) << "\n";
  out << "ground_extent = " << num(spec.ground_x_min) << ' ' << num(spec.ground_x_max) << ' ' << num(spec.ground_z_min)
      << ' ' << num(spec.ground_z_max) << "\n";
  out << "ground_spacing = " << num(spec.ground_spacing) << "\n";
  out << "ground_noise = " << num(spec.ground_noise) << "\n";
  out << "vehicles_occlude = " << (spec.vehicles_occlude ? "true" : "false") << "\n";
  out << "image_size = " << num(spec.image_width) << ' ' << num(spec.image_height) << "\n";
  auto put_box = [&](const Box3D& b) {
    out << num(b.center.x()) << ' ' << num(b.center.y()) << ' ' << num(b.center.z()) << ' ' << num(b.length) << ' '
        << num(b.width) << ' ' << num(b.height) << ' ' << num(b.yaw);
  };
  for (const auto& v : spec.vehicles) {
    out << "vehicle = ";
    put_box(v.box);
    out << ' ' << (v.faces ? format_faces(v.faces) : std::string("none")) << ' ' << num(v.point_spacing) << ' '
        << num(v.noise_sigma) << ' ' << v.outlier_count << "\n";
  }
  for (const auto& o : spec.occluders) {
    out << "occluder = ";
    put_box(o);
    out << "\n";
  }
  return out.str();
}

std::vector<LabelRecord> synth_labels(const SynthScene& scene) {
  std::vector<LabelRecord> out;
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    LabelRecord r = box3d_to_label(scene.gt[i], scene.scene.boxes2d[i].box, "Car");
    r.occlusion = scene.scene.boxes2d[i].occlusion;
    out.push_back(r);
  }
  return out;
}

void write_synth_frame(const std::filesystem::path& root, const std::string& frame_id, const SynthScene& scene) {
  const auto files = frame_files(root, frame_id);
  const Calibration& calib = scene.scene.calib;
  const Mat4 cam_from_lidar = calib.rectification * calib.lidar_to_cam;
  const Mat4 lidar_from_cam = cam_from_lidar.inverse();
  PointCloud lidar;
  lidar.points.reserve(scene.scene.cloud.size());
  for (const auto& p : scene.scene.cloud.points) lidar.points.push_back((lidar_from_cam * p.homogeneous()).head<3>());
  write_binary_file(files.scan, write_scan(lidar));
  write_text_file(files.calib, write_calibration(calib));
  const auto labels = synth_labels(scene);
  write_text_file(files.labels, write_labels(labels));

  nlohmann::ordered_json meta;
  meta["frame"] = frame_id;
  meta["vehicles"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    nlohmann::ordered_json v;
    v["sampled_points"] = scene.sampled_points[i];
    v["visible_points"] = scene.visible_points[i];
    v["occluded_fraction"] = scene.occluded_fraction[i];
    v["clean"] = scene.clean(i);
    meta["vehicles"].push_back(v);
  }
  write_text_file(root / "synth_meta" / (frame_id + ".json"), meta.dump(2) + "\n");
}

}  // namespace pseudolabel
