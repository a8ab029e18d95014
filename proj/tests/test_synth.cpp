#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "test_util.hpp"
#include "uts/synth.hpp"

using namespace uts;
namespace tu = test_util;

namespace {

Scenario basic_scenario() {
  Scenario sc{tu::oblique_camera()};
  sc.duration = 2.0;
  sc.fps = 10.0;
  ScenarioVehicle car;
  car.class_label = VehicleClass::CAR;
  car.shape = {4.5, 1.8, 1.5};
  car.initial_pose = {-5.0, 5.0, 0.2};
  car.segments = {{3.0, 8.0, 0.0}};
  sc.vehicles.push_back(car);
  return sc;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/uts_synth_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("make_lookat_camera points at the target") {
  const Eigen::Vector3d pos(0.0, -25.0, 8.0);
  const Eigen::Vector3d target(5.0, 10.0, 0.0);
  const CameraModel cam = make_lookat_camera(pos, target, 900.0, 960, 600);

  CHECK((cam.camera_center() - pos).norm() < 1e-12);
  // The target projects to the principal point.
  const Eigen::Vector2d px = project_point(cam, target);
  CHECK(px.x() == doctest::Approx(480.0));
  CHECK(px.y() == doctest::Approx(300.0));
  // Image v grows downward: a point above the target appears higher (smaller v).
  const Eigen::Vector2d above = project_point(cam, target + Eigen::Vector3d(0, 0, 1));
  CHECK(above.y() < px.y());
  // Image u grows to the right of the viewing direction.
  const Eigen::Vector3d fwd = (target - pos).normalized();
  const Eigen::Vector3d right = fwd.cross(Eigen::Vector3d(0, 0, 1)).normalized();
  const Eigen::Vector2d right_px = project_point(cam, target + right);
  CHECK(right_px.x() > px.x());
}

TEST_CASE("make_lookat_camera handles a straight-down view") {
  const CameraModel cam =
      make_lookat_camera({0.0, 0.0, 10.0}, {0.0, 0.0, 0.0}, 800.0, 960, 600);
  const Eigen::Vector2d px = project_point(cam, {0.0, 0.0, 0.0});
  CHECK(px.x() == doctest::Approx(480.0));
  CHECK(px.y() == doctest::Approx(300.0));
}

TEST_CASE("vehicle_pose_at integrates segments exactly") {
  ScenarioVehicle veh;
  veh.initial_pose = {0.0, 0.0, 0.0};
  veh.segments = {{1.0, 10.0, 0.0}, {1.0, M_PI, 0.5 * M_PI}};

  // Mid first segment.
  CHECK(vehicle_pose_at(veh, 0.5).isApprox(Eigen::Vector3d(5.0, 0.0, 0.0)));
  // End of the straight segment.
  CHECK(vehicle_pose_at(veh, 1.0).isApprox(Eigen::Vector3d(10.0, 0.0, 0.0)));
  // After the full quarter turn of radius 2: offset (2, 2), heading pi/2.
  const Eigen::Vector3d end = vehicle_pose_at(veh, 2.0);
  CHECK(end.x() == doctest::Approx(12.0));
  CHECK(end.y() == doctest::Approx(2.0));
  CHECK(end.z() == doctest::Approx(0.5 * M_PI));
  // Time past the last segment freezes the pose.
  CHECK(vehicle_pose_at(veh, 5.0).isApprox(end));

  // Integration is consistent with taking many small exact steps.
  ScenarioVehicle turn;
  turn.initial_pose = {1.0, -2.0, 0.7};
  turn.segments = {{2.0, 6.0, 0.4}};
  Eigen::Vector3d stepped = turn.initial_pose;
  const int kSteps = 1000;
  for (int i = 0; i < kSteps; ++i) {
    ScenarioVehicle tmp = turn;
    tmp.initial_pose = stepped;
    stepped = vehicle_pose_at(tmp, 2.0 / kSteps);
  }
  const Eigen::Vector3d direct = vehicle_pose_at(turn, 2.0);
  CHECK((stepped - direct).norm() < 1e-9);
}

TEST_CASE("generate_truth frames, lifetimes and segment attributes") {
  Scenario sc = basic_scenario();
  sc.duration = 1.0;
  sc.fps = 10.0;
  sc.vehicles[0].spawn_time = 0.25;
  sc.vehicles[0].segments = {{0.3, 8.0, 0.0}, {1.0, 5.0, 0.2}};

  const auto truth = generate_truth(sc);
  // Frames 0..10; the vehicle exists for t in [0.25, 1.55] -> frames 3..10.
  REQUIRE(!truth.empty());
  CHECK(truth.front().frame == 3);
  CHECK(truth.back().frame == 10);
  CHECK(truth.size() == 8);
  for (const auto& tb : truth) {
    CHECK(tb.id == 0);
    CHECK(tb.class_label == VehicleClass::CAR);
    CHECK(tb.box.center.z() == doctest::Approx(0.75));
    // Active segment: first until local time 0.3, second afterwards.
    const double local = tb.time - 0.25;
    if (local < 0.3) {
      CHECK(tb.v == doctest::Approx(8.0));
      CHECK(tb.omega == doctest::Approx(0.0));
    } else {
      CHECK(tb.v == doctest::Approx(5.0));
      CHECK(tb.omega == doctest::Approx(0.2));
    }
  }
}

TEST_CASE("render_detections without noise reproduces the projected outline") {
  const Scenario sc = basic_scenario();
  const auto truth = generate_truth(sc);
  const auto dets = render_detections(sc, truth, 123);
  REQUIRE(dets.size() == truth.size());
  for (size_t i = 0; i < dets.size(); ++i) {
    const Box2D want = project_box_outline(sc.camera, truth[i].box).box;
    CHECK(dets[i].box.t == doctest::Approx(want.t));
    CHECK(dets[i].box.l == doctest::Approx(want.l));
    CHECK(dets[i].box.b == doctest::Approx(want.b));
    CHECK(dets[i].box.r == doctest::Approx(want.r));
    CHECK(dets[i].frame == truth[i].frame);
    CHECK(dets[i].class_label == truth[i].class_label);
  }
}

TEST_CASE("render_detections noise is seeded and well formed") {
  Scenario sc = basic_scenario();
  sc.noise_sigma_px = 2.0;
  sc.duration = 10.0;
  sc.vehicles[0].segments = {{12.0, 3.0, 0.05}};
  const auto truth = generate_truth(sc);

  const auto a = render_detections(sc, truth, 7);
  const auto b = render_detections(sc, truth, 7);
  const auto c = render_detections(sc, truth, 8);
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].box.t == b[i].box.t);
    CHECK(a[i].box.l == b[i].box.l);
    CHECK(a[i].box.t <= a[i].box.b);
    CHECK(a[i].box.l <= a[i].box.r);
    if (a[i].box.t != c[i].box.t) differs = true;
  }
  CHECK(differs);

  // The edge noise has roughly the configured scale.
  double sum = 0.0, sum2 = 0.0;
  int count = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Box2D want = project_box_outline(sc.camera, truth[i].box).box;
    for (double d : {a[i].box.t - want.t, a[i].box.l - want.l,
                     a[i].box.b - want.b, a[i].box.r - want.r}) {
      sum += d;
      sum2 += d * d;
      ++count;
    }
  }
  const double var = sum2 / count - (sum / count) * (sum / count);
  CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("render_detections drops boxes behind the camera") {
  Scenario sc = basic_scenario();
  // Drive from behind the camera (y = -25) forward into view.
  sc.vehicles[0].initial_pose = {0.0, -40.0, 0.5 * M_PI};
  sc.vehicles[0].segments = {{10.0, 5.0, 0.0}};
  sc.duration = 10.0;
  const auto truth = generate_truth(sc);
  const auto dets = render_detections(sc, truth, 0);
  CHECK(dets.size() < truth.size());
  CHECK(!dets.empty());
}

TEST_CASE("occluder truncation clips or removes detections") {
  Scenario sc = basic_scenario();
  sc.truncate_at_occluders = true;

  const auto truth = generate_truth(sc);
  const auto clean = render_detections(sc, truth, 0);
  REQUIRE(!clean.empty());
  const Box2D box = clean.front().box;

  // A vertical strip over the left half of the box truncates it from the left.
  const double mid = 0.5 * (box.l + box.r);
  sc.mask.occluder_regions = {
      {{box.l - 50, box.t - 50}, {mid, box.t - 50}, {mid, box.b + 50},
       {box.l - 50, box.b + 50}}};
  const auto clipped = render_detections(sc, truth, 0);
  REQUIRE(!clipped.empty());
  CHECK(clipped.front().box.l == doctest::Approx(mid));
  CHECK(clipped.front().box.r == doctest::Approx(box.r));

  // An occluder swallowing the whole box removes the detection.
  sc.mask.occluder_regions = {{{box.l - 50, box.t - 50},
                               {box.r + 50, box.t - 50},
                               {box.r + 50, box.b + 50},
                               {box.l - 50, box.b + 50}}};
  const auto gone = render_detections(sc, truth, 0);
  CHECK(gone.size() < clean.size());
}

TEST_CASE("detections and truth JSONL round trips") {
  const Scenario sc = basic_scenario();
  const auto truth = generate_truth(sc);
  const auto dets = render_detections(sc, truth, 0);

  const std::string dpath = write_temp("dets.jsonl", detections_to_jsonl(dets));
  const auto dets2 = load_detections(dpath);
  REQUIRE(dets2.size() == dets.size());
  for (size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets2[i].frame == dets[i].frame);
    CHECK(dets2[i].timestamp == doctest::Approx(dets[i].timestamp));
    CHECK(dets2[i].box.t == doctest::Approx(dets[i].box.t));
    CHECK(dets2[i].box.r == doctest::Approx(dets[i].box.r));
  }
  std::remove(dpath.c_str());

  const std::string tpath = write_temp("truth.jsonl", truth_to_jsonl(truth));
  const auto truth2 = load_truth(tpath);
  REQUIRE(truth2.size() == truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    CHECK(truth2[i].id == truth[i].id);
    CHECK((truth2[i].box.center - truth[i].box.center).norm() < 1e-9);
    CHECK(truth2[i].box.yaw == doctest::Approx(truth[i].box.yaw));
    CHECK(truth2[i].v == doctest::Approx(truth[i].v));
  }
  std::remove(tpath.c_str());
}

TEST_CASE("camera and mask serialization round trips") {
  const CameraModel cam = tu::oblique_camera();
  const CameraModel back = CameraModel::from_json_text(camera_to_json(cam));
  CHECK((back.K() - cam.K()).norm() < 1e-9);
  CHECK((back.rotation() - cam.rotation()).norm() < 1e-9);
  CHECK((back.camera_center() - cam.camera_center()).norm() < 1e-9);
  CHECK(back.image_width() == cam.image_width());

  SceneMask mask;
  mask.detection_area = {{0, 0}, {960, 0}, {960, 600}, {0, 600}};
  mask.occluder_regions = {{{100, 100}, {200, 100}, {200, 300}, {100, 300}}};
  const SceneMask back_mask = SceneMask::from_json_text(mask_to_json(mask));
  REQUIRE(back_mask.detection_area.size() == 4);
  REQUIRE(back_mask.occluder_regions.size() == 1);
  CHECK(back_mask.detection_area[2].isApprox(Eigen::Vector2d(960, 600)));
  CHECK(back_mask.occluder_regions[0][3].isApprox(Eigen::Vector2d(100, 300)));
}

TEST_CASE("Scenario JSON parsing supports both camera forms") {
  const std::string with_pose = R"({
    "camera": {"position": [0, -25, 8], "look_at": [5, 10, 0],
               "focal_px": 900, "image_size": [960, 600]},
    "duration": 4.0, "fps": 20.0, "noise_sigma_px": 1.5,
    "truncate_at_occluders": true,
    "detection_area": [[0, 0], [960, 0], [960, 600], [0, 600]],
    "occluders": [[[10, 10], [20, 10], [20, 20], [10, 20]]],
    "vehicles": [
      {"class": "BUS", "shape": [12.0, 2.5, 3.2], "spawn_time": 0.5,
       "pose": [-10, 0, 0.1],
       "segments": [{"duration": 2.0, "v": 9.0},
                    {"duration": 1.5, "v": 9.0, "omega": 0.3}]}
    ]
  })";
  const Scenario sc = Scenario::from_json_text(with_pose);
  CHECK(sc.duration == doctest::Approx(4.0));
  CHECK(sc.fps == doctest::Approx(20.0));
  CHECK(sc.noise_sigma_px == doctest::Approx(1.5));
  CHECK(sc.truncate_at_occluders);
  CHECK(sc.mask.detection_area.size() == 4);
  CHECK(sc.mask.occluder_regions.size() == 1);
  REQUIRE(sc.vehicles.size() == 1);
  CHECK(sc.vehicles[0].class_label == VehicleClass::BUS);
  CHECK(sc.vehicles[0].spawn_time == doctest::Approx(0.5));
  REQUIRE(sc.vehicles[0].segments.size() == 2);
  CHECK(sc.vehicles[0].segments[0].omega == doctest::Approx(0.0));
  CHECK(sc.vehicles[0].segments[1].omega == doctest::Approx(0.3));
  CHECK(sc.vehicles[0].despawn_time() == doctest::Approx(4.0));
  // The parsed camera matches the equivalent look-at construction.
  const CameraModel want =
      make_lookat_camera({0, -25, 8}, {5, 10, 0}, 900, 960, 600);
  CHECK((sc.camera.rotation() - want.rotation()).norm() < 1e-12);

  const std::string with_matrices = R"({
    "camera": {"K": [800, 0, 480, 0, 800, 300, 0, 0, 1],
               "P": [1, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0, 10],
               "image_size": [960, 600]},
    "duration": 1.0, "fps": 10.0,
    "vehicles": []
  })";
  const Scenario sc2 = Scenario::from_json_text(with_matrices);
  CHECK(sc2.camera.camera_center().isApprox(Eigen::Vector3d(0, 0, 10)));
  CHECK(sc2.vehicles.empty());
}
