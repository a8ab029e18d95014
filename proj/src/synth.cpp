#include "uts/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "uts/dynamics.hpp"

namespace uts {

namespace {

// One exact coordinated-turn step on a (x, y, phi) pose.
Eigen::Vector3d ct_step(const Eigen::Vector3d& pose, double v, double omega,
                        double tau) {
  Eigen::Vector3d out = pose;
  const double phi = pose.z();
  if (std::abs(omega) >= 1e-6) {
    out.x() += v / omega * (std::sin(phi + omega * tau) - std::sin(phi));
    out.y() += v / omega * (std::cos(phi) - std::cos(phi + omega * tau));
  } else {
    const double mid = phi + 0.5 * omega * tau;
    out.x() += v * tau * std::cos(mid);
    out.y() += v * tau * std::sin(mid);
  }
  out.z() = wrap_angle(phi + omega * tau);
  return out;
}

nlohmann::json polygon_to_json(const Polygon& poly) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : poly) j.push_back({p.x(), p.y()});
  return j;
}

}  // namespace

CameraModel make_lookat_camera(const Eigen::Vector3d& position,
                               const Eigen::Vector3d& look_at, double focal_px,
                               int image_width, int image_height) {
  const Eigen::Vector3d f = (look_at - position).normalized();
  Eigen::Vector3d up(0.0, 0.0, 1.0);
  if (f.cross(up).norm() < 1e-9) up = Eigen::Vector3d(0.0, 1.0, 0.0);
  const Eigen::Vector3d x_cam = f.cross(up).normalized();
  const Eigen::Vector3d y_cam = f.cross(x_cam);

  Eigen::Matrix<double, 3, 4> P;
  P.col(0) = x_cam;
  P.col(1) = y_cam;
  P.col(2) = f;
  P.col(3) = position;

  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = K(1, 1) = focal_px;
  K(0, 2) = 0.5 * image_width;
  K(1, 2) = 0.5 * image_height;
  return CameraModel(K, P, image_width, image_height);
}

double ScenarioVehicle::despawn_time() const {
  double d = 0.0;
  for (const auto& s : segments) d += s.duration;
  return spawn_time + d;
}

Scenario Scenario::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const auto& jc = j.at("camera");

  std::optional<CameraModel> cam;
  if (jc.contains("K")) {
    cam = CameraModel::from_json_text(jc.dump());
  } else {
    auto pos = jc.at("position").get<std::vector<double>>();
    auto at = jc.at("look_at").get<std::vector<double>>();
    auto size = jc.at("image_size").get<std::vector<int>>();
    cam = make_lookat_camera({pos[0], pos[1], pos[2]}, {at[0], at[1], at[2]},
                             jc.at("focal_px").get<double>(), size[0], size[1]);
  }

  Scenario sc{*cam};
  sc.duration = j.at("duration").get<double>();
  sc.fps = j.at("fps").get<double>();
  sc.noise_sigma_px = j.value("noise_sigma_px", 0.0);
  sc.truncate_at_occluders = j.value("truncate_at_occluders", false);
  if (j.contains("detection_area")) {
    for (const auto& p : j.at("detection_area")) {
      sc.mask.detection_area.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
  }
  if (j.contains("occluders")) {
    for (const auto& poly : j.at("occluders")) {
      Polygon pg;
      for (const auto& p : poly) pg.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      sc.mask.occluder_regions.push_back(std::move(pg));
    }
  }
  for (const auto& jv : j.at("vehicles")) {
    ScenarioVehicle v;
    v.class_label = vehicle_class_from_string(jv.at("class").get<std::string>());
    auto shape = jv.at("shape").get<std::vector<double>>();
    v.shape = {shape[0], shape[1], shape[2]};
    v.spawn_time = jv.value("spawn_time", 0.0);
    auto pose = jv.at("pose").get<std::vector<double>>();
    v.initial_pose = {pose[0], pose[1], pose[2]};
    for (const auto& js : jv.at("segments")) {
      v.segments.push_back({js.at("duration").get<double>(),
                            js.at("v").get<double>(),
                            js.value("omega", 0.0)});
    }
    sc.vehicles.push_back(std::move(v));
  }
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Eigen::Vector3d vehicle_pose_at(const ScenarioVehicle& vehicle, double t) {
  Eigen::Vector3d pose = vehicle.initial_pose;
  double remaining = t;
  for (const auto& seg : vehicle.segments) {
    const double dt = std::min(remaining, seg.duration);
    if (dt > 0.0) pose = ct_step(pose, seg.v, seg.omega, dt);
    remaining -= dt;
    if (remaining <= 0.0) break;
  }
  return pose;
}

std::vector<TruthBox> generate_truth(const Scenario& scenario) {
  std::vector<TruthBox> out;
  const int frames = int(std::floor(scenario.duration * scenario.fps)) + 1;
  for (int f = 0; f < frames; ++f) {
    const double t = f / scenario.fps;
    for (size_t vi = 0; vi < scenario.vehicles.size(); ++vi) {
      const auto& veh = scenario.vehicles[vi];
      if (t < veh.spawn_time || t > veh.despawn_time()) continue;
      const double local = t - veh.spawn_time;
      const Eigen::Vector3d pose = vehicle_pose_at(veh, local);

      // Active segment (right-continuous at boundaries).
      double acc = 0.0;
      const MotionSegment* seg = &veh.segments.back();
      for (const auto& s : veh.segments) {
        if (local < acc + s.duration) {
          seg = &s;
          break;
        }
        acc += s.duration;
      }

      TruthBox tb;
      tb.frame = f;
      tb.time = t;
      tb.id = int(vi);
      tb.class_label = veh.class_label;
      tb.box.center = {pose.x(), pose.y(), 0.5 * veh.shape.z()};
      tb.box.shape = veh.shape;
      tb.box.yaw = pose.z();
      tb.v = seg->v;
      tb.omega = seg->omega;
      out.push_back(tb);
    }
  }
  return out;
}

namespace {

// Removes the part of the box covered by an occluder's bounding box when it
// spans a full side strip, mimicking a detector that only sees the visible
// part. Returns false when nothing visible remains.
bool truncate_box(Box2D& box, const Polygon& occluder) {
  double ol = occluder[0].x(), orr = ol, ot = occluder[0].y(), ob = ot;
  for (const auto& p : occluder) {
    ol = std::min(ol, p.x());
    orr = std::max(orr, p.x());
    ot = std::min(ot, p.y());
    ob = std::max(ob, p.y());
  }
  const double il = std::max(box.l, ol), ir = std::min(box.r, orr);
  const double it = std::max(box.t, ot), ib = std::min(box.b, ob);
  if (il >= ir || it >= ib) return true;

  const double eps = 1e-9;
  const bool full_w = il <= box.l + eps && ir >= box.r - eps;
  const bool full_h = it <= box.t + eps && ib >= box.b - eps;
  if (full_w && full_h) return false;
  if (full_w) {
    if (it <= box.t + eps) box.t = ib;
    else if (ib >= box.b - eps) box.b = it;
  } else if (full_h) {
    if (il <= box.l + eps) box.l = ir;
    else if (ir >= box.r - eps) box.r = il;
  }
  return box.t < box.b && box.l < box.r;
}

}  // namespace

std::vector<Detection> render_detections(const Scenario& scenario,
                                         const std::vector<TruthBox>& truth,
                                         uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Detection> out;
  for (const auto& tb : truth) {
    Box2D box;
    try {
      box = project_box_outline(scenario.camera, tb.box).box;
    } catch (const PointBehindCamera&) {
      continue;
    }
    if (scenario.noise_sigma_px > 0.0) {
      box.t += scenario.noise_sigma_px * n(rng);
      box.l += scenario.noise_sigma_px * n(rng);
      box.b += scenario.noise_sigma_px * n(rng);
      box.r += scenario.noise_sigma_px * n(rng);
      if (box.t > box.b) std::swap(box.t, box.b);
      if (box.l > box.r) std::swap(box.l, box.r);
    }
    // Truncate after the noise so a clipped edge sits exactly on the occluder
    // boundary, the same cue a downstream edge-validity test keys on.
    if (scenario.truncate_at_occluders) {
      bool visible = true;
      for (const auto& occ : scenario.mask.occluder_regions) {
        if (!truncate_box(box, occ)) {
          visible = false;
          break;
        }
      }
      if (!visible) continue;
    }
    Detection det;
    det.frame = tb.frame;
    det.timestamp = tb.time;
    det.box = box;
    det.class_label = tb.class_label;
    det.score = 1.0;
    out.push_back(det);
  }
  return out;
}

std::string detections_to_jsonl(const std::vector<Detection>& detections) {
  std::ostringstream os;
  for (const auto& d : detections) {
    nlohmann::json j;
    j["frame"] = d.frame;
    j["time"] = d.timestamp;
    j["t"] = d.box.t;
    j["l"] = d.box.l;
    j["b"] = d.box.b;
    j["r"] = d.box.r;
    j["class"] = to_string(d.class_label);
    j["score"] = d.score;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string truth_to_jsonl(const std::vector<TruthBox>& truth) {
  std::ostringstream os;
  for (const auto& t : truth) {
    nlohmann::json j;
    j["frame"] = t.frame;
    j["time"] = t.time;
    j["id"] = t.id;
    j["class"] = to_string(t.class_label);
    j["center"] = {t.box.center.x(), t.box.center.y(), t.box.center.z()};
    j["shape"] = {t.box.shape.x(), t.box.shape.y(), t.box.shape.z()};
    j["yaw"] = t.box.yaw;
    j["v"] = t.v;
    j["omega"] = t.omega;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::vector<TruthBox> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open truth file: " + path);
  std::vector<TruthBox> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    TruthBox t;
    t.frame = j.at("frame").get<int>();
    t.time = j.at("time").get<double>();
    t.id = j.at("id").get<int>();
    t.class_label = vehicle_class_from_string(j.at("class").get<std::string>());
    auto c = j.at("center").get<std::vector<double>>();
    auto s = j.at("shape").get<std::vector<double>>();
    t.box.center = {c[0], c[1], c[2]};
    t.box.shape = {s[0], s[1], s[2]};
    t.box.yaw = j.at("yaw").get<double>();
    t.v = j.value("v", 0.0);
    t.omega = j.value("omega", 0.0);
    out.push_back(t);
  }
  return out;
}

std::string camera_to_json(const CameraModel& cam) {
  nlohmann::json j;
  std::vector<double> K;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) K.push_back(cam.K()(r, c));
  // P is stored row-major as [R | t].
  std::vector<double> P_rm(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) P_rm[4 * r + c] = cam.rotation()(r, c);
    P_rm[4 * r + 3] = cam.camera_center()(r);
  }
  j["K"] = K;
  j["P"] = P_rm;
  j["image_size"] = {cam.image_width(), cam.image_height()};
  return j.dump(2) + "\n";
}

std::string mask_to_json(const SceneMask& mask) {
  nlohmann::json j;
  j["detection_area"] = polygon_to_json(mask.detection_area);
  nlohmann::json occ = nlohmann::json::array();
  for (const auto& p : mask.occluder_regions) occ.push_back(polygon_to_json(p));
  j["occluders"] = occ;
  return j.dump(2) + "\n";
}

}  // namespace uts
