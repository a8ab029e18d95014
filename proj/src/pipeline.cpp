#include "uts/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uts/dynamics.hpp"
#include "uts/init3d.hpp"

namespace uts {

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BadConfig(std::string("config parse error: ") + e.what());
  }
  PipelineConfig c;
  c.detection_sigma_px = j.value("detection_sigma_px", c.detection_sigma_px);
  c.border_px = j.value("border_px", c.border_px);
  c.iou_gate = j.value("iou_gate", c.iou_gate);
  c.confirm_hits = j.value("confirm_hits", c.confirm_hits);
  c.max_misses = j.value("max_misses", c.max_misses);
  c.promotion_phi_deg = j.value("promotion_phi_deg", c.promotion_phi_deg);
  c.promotion_displacement_sigma =
      j.value("promotion_displacement_sigma", c.promotion_displacement_sigma);
  c.accel_noise_density = j.value("accel_noise_density", c.accel_noise_density);
  c.log_scale_noise_density =
      j.value("log_scale_noise_density", c.log_scale_noise_density);
  c.velocity_noise_density =
      j.value("velocity_noise_density", c.velocity_noise_density);
  c.turn_rate_noise_density =
      j.value("turn_rate_noise_density", c.turn_rate_noise_density);
  c.shape_noise_density = j.value("shape_noise_density", c.shape_noise_density);
  c.omega_init_sigma = j.value("omega_init_sigma", c.omega_init_sigma);
  c.ut_alpha = j.value("ut_alpha", c.ut_alpha);
  c.ut_beta = j.value("ut_beta", c.ut_beta);
  c.ut_kappa = j.value("ut_kappa", c.ut_kappa);
  c.priors_path = j.value("priors_path", c.priors_path);
  c.mask_path = j.value("mask_path", c.mask_path);
  c.calibration_path = j.value("calibration_path", c.calibration_path);
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadConfig("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw BadConfig(std::string(name) + " must be > 0");
  };
  positive(detection_sigma_px, "detection_sigma_px");
  positive(border_px, "border_px");
  positive(iou_gate, "iou_gate");
  positive(double(confirm_hits), "confirm_hits");
  positive(double(max_misses), "max_misses");
  positive(promotion_phi_deg, "promotion_phi_deg");
  positive(promotion_displacement_sigma, "promotion_displacement_sigma");
  positive(accel_noise_density, "accel_noise_density");
  positive(log_scale_noise_density, "log_scale_noise_density");
  positive(velocity_noise_density, "velocity_noise_density");
  positive(turn_rate_noise_density, "turn_rate_noise_density");
  positive(shape_noise_density, "shape_noise_density");
  if (!(ut_alpha > 0.0 && ut_alpha <= 1.0)) {
    throw BadConfig("ut_alpha must lie in (0, 1]");
  }
}

namespace {

// Exact discretization of continuous white noise on the acceleration and
// log-scale-rate states. The closed forms compose across split time steps.
Eigen::Matrix<double, 10, 10> process_noise_2d(const Vec10& mean_after,
                                               double tau,
                                               const PipelineConfig& cfg) {
  using namespace s2d;
  Eigen::Matrix<double, 10, 10> Q = Eigen::Matrix<double, 10, 10>::Zero();
  const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
  const double qa = cfg.accel_noise_density;
  const int cva[2][3] = {{CX, VX, AX}, {CY, VY, AY}};
  for (const auto& idx : cva) {
    Q(idx[0], idx[0]) = qa * t5 / 20.0;
    Q(idx[0], idx[1]) = Q(idx[1], idx[0]) = qa * t4 / 8.0;
    Q(idx[0], idx[2]) = Q(idx[2], idx[0]) = qa * t3 / 6.0;
    Q(idx[1], idx[1]) = qa * t3 / 3.0;
    Q(idx[1], idx[2]) = Q(idx[2], idx[1]) = qa * t2 / 2.0;
    Q(idx[2], idx[2]) = qa * tau;
  }
  const double qs = cfg.log_scale_noise_density;
  const int sds[2][2] = {{SW, DSW}, {SH, DSH}};
  for (const auto& idx : sds) {
    const double s = mean_after(idx[0]);
    Q(idx[0], idx[0]) = qs * s * s * t3 / 3.0;
    Q(idx[0], idx[1]) = Q(idx[1], idx[0]) = qs * s * t2 / 2.0;
    Q(idx[1], idx[1]) = qs * tau;
  }
  return Q;
}

Eigen::Matrix<double, 8, 8> process_noise_3d(double tau,
                                             const PipelineConfig& cfg) {
  using namespace s3d;
  Eigen::Matrix<double, 8, 8> Q = Eigen::Matrix<double, 8, 8>::Zero();
  Q(V, V) = cfg.velocity_noise_density * tau;
  Q(OMEGA, OMEGA) = cfg.turn_rate_noise_density * tau;
  Q(L, L) = Q(W, W) = Q(H, H) = cfg.shape_noise_density * tau;
  return Q;
}

}  // namespace

Pipeline::Pipeline(CameraModel camera, SceneMask mask,
                   std::map<VehicleClass, ShapePrior> priors,
                   PipelineConfig config)
    : camera_(std::move(camera)),
      mask_(std::move(mask)),
      priors_(std::move(priors)),
      config_(std::move(config)) {
  config_.validate();
}

GaussianState Pipeline::initial_state_2d(const Detection& det) const {
  const auto [c, s] = cs_from_box(det.box);
  using namespace s2d;
  GaussianState g;
  g.mean = Eigen::VectorXd::Zero(kDim);
  g.mean(CX) = c.x();
  g.mean(CY) = c.y();
  g.mean(SW) = s.x();
  g.mean(SH) = s.y();

  const double sig = config_.detection_sigma_px;
  Eigen::VectorXd d(kDim);
  // Position/size from the measurement; velocity, scale rate and
  // acceleration start wide open.
  d << 0.5 * sig * sig, 0.5 * sig * sig, 2.0 * sig * sig, 2.0 * sig * sig,
      200.0 * 200.0, 200.0 * 200.0, 1.0, 1.0, 100.0 * 100.0, 100.0 * 100.0;
  g.cov = d.asDiagonal();
  return g;
}

void Pipeline::predict_track(Track& track, double t_now) {
  const double tau = t_now - track.last_time;
  if (tau <= 0.0) return;
  if (track.stage == TrackStage::TwoD) {
    const Vec10 x = track.state.mean;
    const Eigen::Matrix<double, 10, 10> F = transition_2d_jacobian(x, tau);
    track.state.mean = transition_2d(x, tau);
    track.state.cov = F * track.state.cov * F.transpose() +
                      process_noise_2d(track.state.mean, tau, config_);
  } else {
    track.state = ukf_predict(
        track.state,
        [tau](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return transition_3d(x, tau);
        },
        process_noise_3d(tau, config_), {s3d::PHI}, config_.ut_params());
  }
  track.last_time = t_now;
}

std::optional<Box2D> Pipeline::predicted_box(const Track& track) const {
  try {
    if (track.stage == TrackStage::TwoD) {
      const Eigen::Vector4d y = observe_2d(track.state.mean);
      if (y(2) <= 0.0 || y(3) <= 0.0) return std::nullopt;
      return box_from_cs(y.head<2>(), y.tail<2>());
    }
    const Eigen::Vector4d y = observe_3d(camera_, track.state.mean);
    return Box2D{y(0), y(1), y(2), y(3)};
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

void Pipeline::update_track(Track& track, const Detection& det) {
  const double sig = config_.detection_sigma_px;
  if (track.stage == TrackStage::TwoD) {
    // Eq. 6 has no masking; partially occluded detections are only fused
    // when at least three edges are trustworthy.
    if (det.valid_edge_count() < 3) return;
    const auto [c, s] = cs_from_box(det.box);
    Eigen::Vector4d z;
    z << c.x(), c.y(), s.x(), s.y();
    const Eigen::Vector4d rdiag(0.5 * sig * sig, 0.5 * sig * sig,
                                2.0 * sig * sig, 2.0 * sig * sig);
    track.state = ekf_update(
        track.state,
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.head<4>(); },
        observe_2d_jacobian(), z, rdiag.asDiagonal());
  } else {
    const auto edge_valid = det.edge_valid;
    const int k = det.valid_edge_count();
    if (k == 0) return;
    Eigen::VectorXd z(k);
    const double coords[4] = {det.box.t, det.box.l, det.box.b, det.box.r};
    int j = 0;
    for (int e = 0; e < 4; ++e) {
      if (edge_valid[e]) z(j++) = coords[e];
    }
    const CameraModel& cam = camera_;
    track.state = ukf_update(
        track.state,
        [&cam, &edge_valid](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return observe_3d_masked(cam, x, edge_valid);
        },
        z, sig * sig * Eigen::MatrixXd::Identity(k, k), {s3d::PHI}, {},
        config_.ut_params());
  }
}

void Pipeline::try_promote(Track& track) {
  if (track.stage != TrackStage::TwoD || track.status != TrackStatus::Confirmed)
    return;
  if (!track.first_valid_detection || !track.last_valid_detection) return;

  InitPair pair;
  pair.det_a = *track.first_valid_detection;
  pair.det_b = *track.last_valid_detection;
  pair.tau = pair.det_b.timestamp - pair.det_a.timestamp;
  if (pair.tau <= 0.0) return;
  pair.detection_sigma = config_.detection_sigma_px;
  auto it = priors_.find(track.majority_class());
  if (it == priors_.end()) return;
  pair.prior = it->second;

  try {
    const OrientationEstimate est = estimate_orientation(camera_, pair);
    const double phi_std = std::sqrt(est.phi_v.cov(0, 0));
    if (phi_std >= config_.promotion_phi_deg * M_PI / 180.0) return;
    if (est.displacement <=
        config_.promotion_displacement_sigma * est.position_sigma)
      return;
    track.state = initialize_3d(camera_, pair, &est, config_.omega_init_sigma);
    track.stage = TrackStage::ThreeD;
  } catch (const std::runtime_error&) {
    // Not promotable yet; stay in the 2D stage.
  }
}

std::vector<TrackOutputRecord> Pipeline::process_frame(
    const std::vector<Detection>& raw_detections, double t_now, int frame) {
  if (t_now <= last_frame_time_) {
    throw std::invalid_argument("frame timestamps must strictly increase");
  }
  last_frame_time_ = t_now;

  std::vector<Detection> dets = filter_detections(raw_detections, mask_);
  for (auto& d : dets) {
    d = mark_edge_validity(d, mask_, camera_.image_width(),
                           camera_.image_height(), config_.border_px);
  }

  std::vector<size_t> active;
  for (size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].status != TrackStatus::Dead) active.push_back(i);
  }

  for (size_t i : active) predict_track(tracks_[i], t_now);

  Eigen::MatrixXd cost(active.size(), dets.size());
  Eigen::MatrixXd iou = Eigen::MatrixXd::Zero(active.size(), dets.size());
  for (size_t a = 0; a < active.size(); ++a) {
    const auto box = predicted_box(tracks_[active[a]]);
    for (size_t d = 0; d < dets.size(); ++d) {
      if (box) iou(a, d) = iou_2d(*box, dets[d].box);
      cost(a, d) = box ? 1.0 - iou(a, d) : kAssignSentinel;
    }
  }

  std::vector<std::pair<int, int>> matches;
  for (const auto& [a, d] : assign(cost)) {
    if (iou(a, d) >= config_.iou_gate) {
      matches.emplace_back(int(active[a]), d);
    }
  }

  for (const auto& [ti, di] : matches) {
    try {
      update_track(tracks_[ti], dets[di]);
    } catch (const std::runtime_error&) {
      // Degrade to coasting for this frame.
    }
  }

  LifecycleConfig lc{config_.confirm_hits, config_.max_misses};
  const auto created =
      step_lifecycle(tracks_, dets, matches, t_now, lc, next_track_id_);
  for (const auto& [ti, di] : created) {
    tracks_[ti].state = initial_state_2d(dets[di]);
  }

  for (size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].status == TrackStatus::Confirmed) try_promote(tracks_[i]);
  }

  std::vector<TrackOutputRecord> records;
  for (auto& track : tracks_) {
    if (track.status == TrackStatus::Dead) continue;
    const auto box = predicted_box(track);
    if (!box) continue;  // 3D box projects behind the camera this frame

    TrackOutputRecord rec;
    rec.frame = frame;
    rec.time = t_now;
    rec.track_id = track.id;
    rec.stage = track.stage;
    rec.class_label = track.majority_class();
    rec.box2d = *box;
    if (track.stage == TrackStage::ThreeD) {
      rec.box3d = box_from_state(track.state.mean);
      rec.v = track.state.mean(s3d::V);
      rec.omega = track.state.mean(s3d::OMEGA);
    }
    rec.cov_diag.assign(track.state.cov.diagonal().data(),
                        track.state.cov.diagonal().data() + track.state.dim());
    records.push_back(rec);

    track.history.push_back({t_now, track.stage, track.state.mean, *box});
  }
  return records;
}

std::string records_to_jsonl(const std::vector<TrackOutputRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) {
    nlohmann::json j;
    j["frame"] = r.frame;
    j["time"] = r.time;
    j["track_id"] = r.track_id;
    j["stage"] = (r.stage == TrackStage::ThreeD) ? "3D" : "2D";
    j["class"] = to_string(r.class_label);
    j["box2d"] = {r.box2d.t, r.box2d.l, r.box2d.b, r.box2d.r};
    if (r.box3d) {
      j["box3d"] = {
          {"center", {r.box3d->center.x(), r.box3d->center.y(), r.box3d->center.z()}},
          {"shape", {r.box3d->shape.x(), r.box3d->shape.y(), r.box3d->shape.z()}},
          {"yaw", r.box3d->yaw}};
      j["v"] = r.v;
      j["omega"] = r.omega;
    }
    j["cov_diag"] = r.cov_diag;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::vector<TrackOutputRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tracks file: " + path);
  std::vector<TrackOutputRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    TrackOutputRecord r;
    r.frame = j.at("frame").get<int>();
    r.time = j.at("time").get<double>();
    r.track_id = j.at("track_id").get<int>();
    r.stage = (j.at("stage").get<std::string>() == "3D") ? TrackStage::ThreeD
                                                         : TrackStage::TwoD;
    r.class_label = vehicle_class_from_string(j.at("class").get<std::string>());
    auto b = j.at("box2d").get<std::vector<double>>();
    r.box2d = {b[0], b[1], b[2], b[3]};
    if (j.contains("box3d")) {
      OrientedBox3D box;
      auto c = j.at("box3d").at("center").get<std::vector<double>>();
      auto s = j.at("box3d").at("shape").get<std::vector<double>>();
      box.center = {c[0], c[1], c[2]};
      box.shape = {s[0], s[1], s[2]};
      box.yaw = j.at("box3d").at("yaw").get<double>();
      r.box3d = box;
      r.v = j.value("v", 0.0);
      r.omega = j.value("omega", 0.0);
    }
    if (j.contains("cov_diag")) {
      r.cov_diag = j.at("cov_diag").get<std::vector<double>>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

RunSummary run_sequence(const PipelineConfig& config, const CameraModel& camera,
                        const SceneMask& mask,
                        const std::map<VehicleClass, ShapePrior>& priors,
                        const std::string& detections_path,
                        const std::string& output_path) {
  int bad_lines = 0;
  const std::vector<Detection> all = load_detections(detections_path, &bad_lines);

  // Group by frame, ordered by timestamp.
  std::map<int, std::vector<Detection>> by_frame;
  for (const auto& d : all) by_frame[d.frame].push_back(d);

  std::ofstream out(output_path);
  if (!out) throw std::runtime_error("cannot open output file: " + output_path);

  Pipeline pipeline(camera, mask, priors, config);
  RunSummary summary;
  summary.parse_warnings = bad_lines;
  double total_ms = 0.0;
  double prev_time = -std::numeric_limits<double>::infinity();

  for (const auto& [frame, dets] : by_frame) {
    const double t = dets.front().timestamp;
    if (t <= prev_time) {
      ++summary.parse_warnings;
      continue;
    }
    prev_time = t;
    const auto start = std::chrono::steady_clock::now();
    const auto records = pipeline.process_frame(dets, t, frame);
    total_ms += std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    out << records_to_jsonl(records);
    ++summary.frames;
  }

  summary.tracks_created = pipeline.tracks_created();
  for (const auto& tr : pipeline.tracks()) {
    if (tr.status == TrackStatus::Dead) ++summary.tracks_dead;
    if (tr.status == TrackStatus::Confirmed || tr.hits >= config.confirm_hits) {
      ++summary.tracks_confirmed;
    }
  }
  summary.mean_frame_ms = summary.frames ? total_ms / summary.frames : 0.0;
  return summary;
}

std::vector<EvalFrame> build_eval_frames(
    const std::vector<TrackOutputRecord>& records,
    const std::vector<TruthBox>& truth, const CameraModel* camera,
    const SceneMask* mask) {
  std::map<int, EvalFrame> frames;
  for (const auto& r : records) {
    if (!r.box3d) continue;
    auto& f = frames[r.frame];
    f.frame = r.frame;
    f.tracks.push_back({r.track_id, *r.box3d});
  }

  const bool filter_area = camera && mask && mask->detection_area.size() >= 3;
  for (const auto& t : truth) {
    if (filter_area) {
      try {
        const Eigen::Vector2d px = project_point(*camera, t.box.center);
        if (!point_in_polygon(px, mask->detection_area)) continue;
      } catch (const PointBehindCamera&) {
        continue;
      }
    }
    auto& f = frames[t.frame];
    f.frame = t.frame;
    f.truths.push_back({t.id, t.box});
  }

  std::vector<EvalFrame> out;
  out.reserve(frames.size());
  for (auto& [frame, f] : frames) out.push_back(std::move(f));
  return out;
}

}  // namespace uts
