#include "pseudolabel/eval.hpp"
#include "pseudolabel/pipeline.hpp"
#include "pseudolabel/synth.hpp"

#include <doctest.h>

using namespace pseudolabel;

namespace {

SynthSpec two_cars() {
  SynthSpec spec;
  for (const auto& [x, z, yaw] : {std::tuple{-3.0, 12.0, 0.4}, std::tuple{4.0, 20.0, -1.0}}) {
    SynthVehicle v;
    v.box.center = {x, 0.9, z};
    v.box.length = 4.2;
    v.box.width = 1.8;
    v.box.height = 1.5;
    v.box.yaw = yaw;
    v.box = v.box.canonical();
    v.faces = faces_seen_from(v.box, spec.calib.camera_center()) | kFaceTop;
    v.point_spacing = 0.1;
    v.noise_sigma = 0.01;
    spec.vehicles.push_back(v);
  }
  return spec;
}

}  // namespace

TEST_CASE("clean synthetic vehicles come back at IoU >= 0.7") {
  const SynthScene s = generate(two_cars());
  const FrameResult r = label_frame(s.scene, {});
  REQUIRE(r.objects.size() == 2);
  CHECK(r.counts.generated == 2);
  CHECK(r.ground.has_value());
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(r.objects[i].box.has_value());
    CHECK(iou_3d(*r.objects[i].box, s.gt[i]) >= 0.7);
    CHECK(r.objects[i].label->box2d == s.scene.boxes2d[i].box);
  }
  CHECK(r.labels().size() == 2);
}

TEST_CASE("objects of other classes are ignored and empty frustums skipped") {
  SynthScene s = generate(two_cars());
  s.scene.boxes2d[1].type = "Van";
  TaggedBox2D empty;
  empty.box = {1, 1, 3, 3};
  empty.type = "Car";
  empty.source_index = 7;
  s.scene.boxes2d.push_back(empty);
  const FrameResult r = label_frame(s.scene, {});
  REQUIRE(r.objects.size() == 2);
  CHECK(r.objects[0].status == ObjectStatus::Generated);
  CHECK(r.objects[1].status == ObjectStatus::Skipped);
  CHECK(r.objects[1].box_index == 2);
  CHECK(r.counts.skipped == 1);
}

TEST_CASE("size filter rejects implausible boxes") {
  const SynthScene s = generate(two_cars());
  PipelineConfig cfg;
  cfg.rect.size_filter.max_l = 3.0;
  const FrameResult r = label_frame(s.scene, cfg);
  CHECK(r.counts.filtered == 2);
  CHECK(r.labels().empty());
}

TEST_CASE("config entries") {
  PipelineConfig cfg;
  apply_config(cfg, parse_key_values("ransac-iters = 50\nfixed-phi = 0.4\nno-denoise = true\nclasses = Car,Van\n"
                                     "size-filter = 1,8,1,3,0.5,3\nseed = 18446744073709551615\n"));
  CHECK(cfg.ransac.iterations == 50);
  CHECK(cfg.fixed_phi == 0.4);
  CHECK(cfg.segmentation().phis == std::vector<double>{0.4});
  CHECK_FALSE(cfg.denoise);
  CHECK(cfg.classes == std::vector<std::string>{"Car", "Van"});
  CHECK(cfg.rect.size_filter.max_l == 8);
  CHECK(cfg.ransac.seed == 18446744073709551615ull);

  PipelineConfig back;
  apply_config(back, parse_key_values(format_config(cfg)));
  CHECK(format_config(back) == format_config(cfg));

  CHECK_THROWS(apply_config_entry(cfg, "phi-maximum", "1"));
  CHECK_THROWS(apply_config_entry(cfg, "objective", "volume"));
  cfg.phi_min = 0.9;
  cfg.fixed_phi.reset();
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("ablation switches change the pipeline") {
  const SynthScene s = generate(two_cars());
  PipelineConfig plain;
  plain.denoise = false;
  plain.frustum_intersection = false;
  const FrameResult r = label_frame(s.scene, plain);
  CHECK(r.counts.generated == 2);
  PipelineConfig no_ground;
  no_ground.ground_removal = false;
  no_ground.fixed_phi = 0.4;
  const FrameResult g = label_frame(s.scene, no_ground);
  // with the ground left in, a single phi connects the car to the road
  CHECK(g.counts.generated < 2);
}
