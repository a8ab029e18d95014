#include "uts/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uts {

std::string to_string(VehicleClass c) {
  switch (c) {
    case VehicleClass::CAR: return "CAR";
    case VehicleClass::TRUCK: return "TRUCK";
    case VehicleClass::BUS: return "BUS";
    default: return "OTHER";
  }
}

VehicleClass vehicle_class_from_string(const std::string& s) {
  if (s == "CAR") return VehicleClass::CAR;
  if (s == "TRUCK") return VehicleClass::TRUCK;
  if (s == "BUS") return VehicleClass::BUS;
  return VehicleClass::OTHER;
}

namespace {

constexpr double kBoundaryEps = 1e-9;

bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d ap = p - a;
  const double cross = ab.x() * ap.y() - ab.y() * ap.x();
  if (std::abs(cross) > kBoundaryEps * (1.0 + ab.norm())) return false;
  const double dot = ap.dot(ab);
  return dot >= -kBoundaryEps && dot <= ab.squaredNorm() + kBoundaryEps;
}

Polygon parse_polygon(const nlohmann::json& j) {
  Polygon poly;
  for (const auto& v : j) {
    poly.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  }
  return poly;
}

}  // namespace

bool point_in_polygon(const Eigen::Vector2d& p, const Polygon& poly) {
  const size_t n = poly.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    if (on_segment(p, poly[i], poly[(i + 1) % n])) return true;
  }
  // Even-odd ray cast toward +x.
  bool inside = false;
  for (size_t i = 0, k = n - 1; i < n; k = i++) {
    const auto& a = poly[i];
    const auto& b = poly[k];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double xint = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < xint) inside = !inside;
    }
  }
  return inside;
}

double segment_fraction_inside(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const std::vector<Polygon>& polys) {
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (len < 1e-12 || polys.empty()) return 0.0;

  // Split the segment at every polygon-edge crossing and classify the pieces
  // by their midpoints.
  std::vector<double> params = {0.0, 1.0};
  for (const auto& poly : polys) {
    const size_t n = poly.size();
    if (n < 3) continue;
    for (size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d& p = poly[i];
      const Eigen::Vector2d e = poly[(i + 1) % n] - p;
      const double denom = d.x() * e.y() - d.y() * e.x();
      if (std::abs(denom) < 1e-15) continue;
      const Eigen::Vector2d ap = p - a;
      const double t = (ap.x() * e.y() - ap.y() * e.x()) / denom;
      const double u = (ap.x() * d.y() - ap.y() * d.x()) / denom;
      if (t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0) params.push_back(t);
    }
  }
  std::sort(params.begin(), params.end());

  double inside_len = 0.0;
  for (size_t i = 0; i + 1 < params.size(); ++i) {
    const double mid = 0.5 * (params[i] + params[i + 1]);
    const Eigen::Vector2d m = a + mid * d;
    for (const auto& poly : polys) {
      if (point_in_polygon(m, poly)) {
        inside_len += (params[i + 1] - params[i]) * len;
        break;
      }
    }
  }
  return inside_len / len;
}

std::vector<Detection> filter_detections(const std::vector<Detection>& raw,
                                         const SceneMask& mask) {
  std::vector<Detection> out;
  out.reserve(raw.size());
  for (const auto& det : raw) {
    if (det.class_label == VehicleClass::OTHER) continue;
    if (mask.detection_area.size() >= 3 &&
        !point_in_polygon(det.box.center(), mask.detection_area)) {
      continue;
    }
    out.push_back(det);
  }
  return out;
}

Detection mark_edge_validity(Detection det, const SceneMask& mask,
                             int image_width, int image_height, double border_px) {
  const Box2D& b = det.box;
  const double border_dist[4] = {b.t, b.l, image_height - b.b, image_width - b.r};

  const Eigen::Vector2d tl(b.l, b.t), tr(b.r, b.t), bl(b.l, b.b), br(b.r, b.b);
  const std::pair<Eigen::Vector2d, Eigen::Vector2d> edges[4] = {
      {tl, tr}, {tl, bl}, {bl, br}, {tr, br}};

  for (int e = 0; e < 4; ++e) {
    bool valid = border_dist[e] >= border_px;
    if (valid && !mask.occluder_regions.empty()) {
      const double frac = segment_fraction_inside(edges[e].first, edges[e].second,
                                                  mask.occluder_regions);
      if (frac > 0.5) valid = false;
    }
    det.edge_valid[e] = valid;
  }
  return det;
}

std::map<VehicleClass, ShapePrior> default_priors() {
  auto make = [](double l, double w, double h, double sl, double sw, double sh) {
    ShapePrior p;
    p.mean_shape = {l, w, h};
    p.covariance = Eigen::Vector3d(sl * sl, sw * sw, sh * sh).asDiagonal();
    return p;
  };
  return {
      {VehicleClass::CAR, make(4.5, 1.8, 1.5, 0.5, 0.2, 0.2)},
      {VehicleClass::TRUCK, make(7.0, 2.5, 3.0, 1.5, 0.3, 0.5)},
      {VehicleClass::BUS, make(12.0, 2.5, 3.2, 1.0, 0.3, 0.3)},
  };
}

std::map<VehicleClass, ShapePrior> load_priors(const std::string& path) {
  auto priors = default_priors();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open priors file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const VehicleClass cls = vehicle_class_from_string(it.key());
    if (cls == VehicleClass::OTHER) {
      throw std::runtime_error("unknown class in priors file: " + it.key());
    }
    ShapePrior p;
    auto mean = it.value().at("mean").get<std::vector<double>>();
    auto cov = it.value().at("cov").get<std::vector<double>>();
    if (mean.size() != 3 || cov.size() != 9) {
      throw std::runtime_error("bad prior entry for class " + it.key());
    }
    p.mean_shape = {mean[0], mean[1], mean[2]};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) p.covariance(r, c) = cov[3 * r + c];
    priors[cls] = p;
  }
  return priors;
}

SceneMask SceneMask::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SceneMask mask;
  if (j.contains("detection_area")) {
    mask.detection_area = parse_polygon(j.at("detection_area"));
  }
  if (j.contains("occluders")) {
    for (const auto& poly : j.at("occluders")) {
      mask.occluder_regions.push_back(parse_polygon(poly));
    }
  }
  return mask;
}

SceneMask SceneMask::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mask file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::vector<Detection> load_detections(const std::string& path, int* bad_lines) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections file: " + path);
  std::vector<Detection> out;
  int bad = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      Detection d;
      d.frame = j.at("frame").get<int>();
      d.timestamp = j.at("time").get<double>();
      d.box = {j.at("t").get<double>(), j.at("l").get<double>(),
               j.at("b").get<double>(), j.at("r").get<double>()};
      d.class_label = vehicle_class_from_string(j.at("class").get<std::string>());
      d.score = j.at("score").get<double>();
      if (d.box.t > d.box.b || d.box.l > d.box.r || !std::isfinite(d.timestamp)) {
        ++bad;
        continue;
      }
      out.push_back(d);
    } catch (const nlohmann::json::exception&) {
      ++bad;
    }
  }
  if (bad_lines) *bad_lines = bad;
  return out;
}

}  // namespace uts
