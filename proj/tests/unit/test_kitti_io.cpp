#include "pseudolabel/errors.hpp"
#include "pseudolabel/kitti_io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>
#include <random>

using namespace pseudolabel;

namespace {

std::vector<std::byte> floats_le(std::initializer_list<float> values) {
  std::vector<std::byte> out;
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::byte>((bits >> (8 * k)) & 0xff));
  }
  return out;
}

const char* kRealCalib =
    "P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03\n"
    "R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01\n"
    "Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01\n"
    "Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 -7.997231e-01\n";

}  // namespace

TEST_CASE("scan records are 16 little-endian bytes") {
  const PointCloud one = read_scan(floats_le({1.0f, 2.0f, 3.0f, 0.5f}));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Point3(1, 2, 3));
  CHECK(read_scan({}).empty());
  const std::vector<std::byte> odd(33);
  CHECK_THROWS_WITH_AS(read_scan(odd), doctest::Contains("not multiple of 16"), FormatError);
  CHECK_THROWS_WITH_AS(read_scan(odd), doctest::Contains("33"), FormatError);
}

TEST_CASE("scan write/read round trip at float precision") {
  PointCloud c;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-80, 80);
  for (int i = 0; i < 500; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  const PointCloud back = read_scan(write_scan(c));
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back[i].x() == static_cast<double>(static_cast<float>(c[i].x())));
    CHECK(back[i].z() == static_cast<double>(static_cast<float>(c[i].z())));
  }
}

TEST_CASE("calibration parses the three keys and ignores the rest") {
  const Calibration c = read_calibration(kRealCalib);
  // hand split of the P2 line
  const double p2[12] = {7.215377e+02, 0, 6.095593e+02, 4.485728e+01, 0, 7.215377e+02,
                         1.728540e+02, 2.163791e-01, 0, 0, 1, 2.745884e-03};
  for (int i = 0; i < 12; ++i) CHECK(c.projection(i / 4, i % 4) == p2[i]);
  CHECK(c.rectification(0, 1) == 9.837760e-03);
  CHECK(c.rectification(3, 3) == 1.0);
  CHECK(c.lidar_to_cam(2, 3) == -2.717806e-01);
  CHECK_NOTHROW(c.validate());
  const Calibration back = read_calibration(write_calibration(c));
  CHECK((back.projection - c.projection).norm() < 1e-9);
  CHECK((back.lidar_to_cam - c.lidar_to_cam).norm() < 1e-9);
}

TEST_CASE("identity-like P2") {
  const Calibration c =
      read_calibration("P2: 1 0 0 0 0 1 0 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1\nTr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK(c.projection.leftCols<3>().isIdentity());
  CHECK(c.projection.col(3).isZero());
}

TEST_CASE("calibration errors name the key or the line") {
  try {
    read_calibration("P2: 1 0 0 0 0 1 0 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1\n");
    FAIL("expected MissingKeyError");
  } catch (const MissingKeyError& e) {
    CHECK(e.key() == "Tr_velo_to_cam");
    CHECK(std::string(e.what()).find("Tr_velo_to_cam") != std::string::npos);
  }
  try {
    read_calibration("P2: 1 0 0 0 0 1 0 0 0 0 1 0\nR0_rect: 1 0 0 0 1 x 0 0 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(read_calibration("P2: 1 2 3\nR0_rect: 1 0 0 0 1 0 0 0 1\nTr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n"),
                  FormatError);
}

TEST_CASE("lidar_to_rect") {
  PointCloud c;
  c.points = {{0, 0, 5}, {1, 1, 0.05}, {2, 0, -3}, {0, 0, 0.2}};
  Calibration id;
  id.projection = Calibration::pinhole(1, 0, 0).projection;
  const RectifiedCloud r = lidar_to_rect(c, id);
  CHECK(r.cloud.size() == 2);
  CHECK(r.source_index == std::vector<std::size_t>{0, 3});

  Calibration shift = id;
  shift.lidar_to_cam(2, 3) = 5;
  const RectifiedCloud s = lidar_to_rect(c, shift);
  REQUIRE(s.cloud.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.cloud[i].z() == doctest::Approx(c[i].z() + 5));
}

TEST_CASE("lidar_to_rect is an isometry for rigid transforms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
    Calibration c;
    c.lidar_to_cam.topLeftCorner<3, 3>() = q.toRotationMatrix();
    c.lidar_to_cam.topRightCorner<3, 1>() = Vec3(u(rng), u(rng), 60);  // keep everything in front
    PointCloud cloud;
    for (int i = 0; i < 50; ++i) cloud.points.emplace_back(u(rng) * 20, u(rng) * 20, u(rng) * 20);
    const RectifiedCloud r = lidar_to_rect(cloud, c);
    REQUIRE(r.cloud.size() == cloud.size());
    for (std::size_t i = 0; i + 1 < cloud.size(); ++i) {
      CHECK(std::abs((r.cloud[i] - r.cloud[i + 1]).norm() - (cloud[i] - cloud[i + 1]).norm()) < 1e-6);
    }
  }
}

TEST_CASE("label lines and the observation angle") {
  LabelRecord r;
  r.location = {0, 1.5, 10};
  r.rotation_y = 0;
  r.box2d = {10, 20, 30, 40};
  const std::string line = write_labels(std::span(&r, 1));
  CHECK(line.rfind("Car 0.00 0 0.00 10.00 20.00 30.00 40.00", 0) == 0);
  CHECK(observation_angle(std::numbers::pi / 2, {10, 0, 10}) == doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("labels round trip within the printed precision") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<LabelRecord> recs(20);
  for (auto& r : recs) {
    r.truncation = std::abs(u(rng)) / 3;
    r.occlusion = 1;
    r.box2d = {100 + u(rng), 100 + u(rng), 200 + u(rng), 200 + u(rng)};
    r.h = 1.5 + u(rng) / 10;
    r.w = 1.7;
    r.l = 4 + u(rng) / 10;
    r.location = {u(rng) * 5, 1.6, 20 + u(rng)};
    r.rotation_y = u(rng);
  }
  recs[3].score = 0.75;
  const auto back = read_labels(write_labels(recs));
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].type == recs[i].type);
    CHECK(std::abs(back[i].truncation - recs[i].truncation) <= 1e-2);
    CHECK(std::abs(back[i].box2d.u_min - recs[i].box2d.u_min) <= 1e-2);
    CHECK(std::abs(back[i].location.z() - recs[i].location.z()) <= 1e-2);
    CHECK(std::abs(back[i].rotation_y - recs[i].rotation_y) <= 1e-2);
    CHECK(std::abs(back[i].alpha - observation_angle(recs[i].rotation_y, recs[i].location)) <= 1e-2);
    CHECK(back[i].score.has_value() == recs[i].score.has_value());
  }
  CHECK_THROWS_AS(read_labels("Car 0 0 0 1 2 3\n"), ParseError);
  CHECK_THROWS_AS(read_labels("Car 0 0 0 1 2 3 4 1 1 1 0 0 x 0\n"), ParseError);
}

TEST_CASE("box3d_to_label uses the bottom-face center") {
  Box3D b;
  b.center = {0, 0, 10};
  b.length = 4;
  b.width = 1.8;
  b.height = 1.5;
  const LabelRecord r = box3d_to_label(b, {0, 0, 1, 1});
  CHECK(r.location.isApprox(Point3(0, 0.75, 10)));
  CHECK(r.h == 1.5);
  CHECK(r.l == 4);
}

TEST_CASE("yaw survives label conversion modulo pi") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 500; ++i) {
    Box3D b;
    b.center = {u(rng) * 5, 1, 10 + u(rng) * 3};
    b.length = 4.2;
    b.width = 1.7;
    b.height = 1.5;
    b.yaw = u(rng);
    const Box3D back = label_to_box3d(box3d_to_label(b, {0, 0, 1, 1}));
    const double d = wrap_angle(2 * (back.yaw - b.yaw)) / 2;
    CHECK(std::abs(d) < 1e-9);
    const auto c0 = b.corners();
    const auto c1 = back.corners();
    for (const auto& p : c0) {
      double best = 1e9;
      for (const auto& q : c1) best = std::min(best, (p - q).norm());
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("written label expands back to the same corners") {
  // values exact at the two printed decimals
  Box3D b;
  b.center = {3.25, 0.85, 17.5};
  b.length = 4.1;
  b.width = 1.75;
  b.height = 1.5;
  b.yaw = -0.42;
  LabelRecord r = box3d_to_label(b, {10, 10, 50, 50});
  const auto text = write_labels(std::span(&r, 1));
  const Box3D back = label_to_box3d(read_labels(text).at(0));
  for (const auto& p : b.corners()) {
    double best = 1e9;
    for (const auto& q : back.corners()) best = std::min(best, (p - q).norm());
    CHECK(best < 1e-6);
  }
}

TEST_CASE("frames on disk") {
  const auto root = testing::scratch_dir("kitti_io");
  const auto files = frame_files(root, "000007");
  std::filesystem::create_directories(files.scan.parent_path());
  std::filesystem::create_directories(files.calib.parent_path());
  std::filesystem::create_directories(files.labels.parent_path());
  Calibration c = Calibration::pinhole(700, 600, 180);
  c.lidar_to_cam.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  PointCloud lidar;
  lidar.points = {{10, 0, 0}, {-5, 0, 0}, {20, 1, -1}};
  write_binary_file(files.scan, write_scan(lidar));
  write_text_file(files.calib, write_calibration(c));
  write_text_file(files.labels,
                  "Car 0.00 0 0.00 500.00 150.00 700.00 250.00 1.50 1.70 4.00 0.00 1.60 10.00 0.00\n"
                  "DontCare -1 -1 -10 0.00 0.00 0.00 0.00 -1 -1 -1 -1000 -1000 -1000 -10\n"
                  "Pedestrian 0.30 2 0.00 100.00 150.00 130.00 250.00 1.70 0.60 0.80 2.00 1.60 8.00 0.00\n");
  CHECK(list_frames(root) == std::vector<std::string>{"000007"});
  CHECK(frame_name(7) == "000007");
  const LoadedFrame f = load_frame(root, "000007");
  CHECK(f.scene.cloud.size() == 2);  // the point behind the camera is dropped
  CHECK(f.scene.cloud[0].isApprox(Point3(0, 0, 10)));
  CHECK(f.labels.size() == 3);
  REQUIRE(f.scene.boxes2d.size() == 2);
  CHECK(f.scene.boxes2d[1].type == "Pedestrian");
  CHECK(f.scene.boxes2d[1].source_index == 2);
  CHECK(f.scene.boxes2d[1].occlusion == 2);
  CHECK_THROWS(load_frame(root, "000008"));
}
