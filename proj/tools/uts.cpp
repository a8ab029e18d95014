// Command line front end: `track` runs the tracker over a detections file,
// `synth` renders a synthetic scenario to detections plus ground truth, and
// `eval` scores tracks against truth with 3D-IoU CLEAR-MOT metrics.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uts/pipeline.hpp"
#include "uts/synth.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitBadInput = 2;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

int run_track(const std::string& calib_path, const std::string& det_path,
              const std::string& mask_path, const std::string& config_path,
              const std::string& out_path) {
  uts::PipelineConfig config;
  uts::SceneMask mask;
  std::map<uts::VehicleClass, uts::ShapePrior> priors;
  std::unique_ptr<uts::CameraModel> camera;
  try {
    if (!config_path.empty()) config = uts::PipelineConfig::load(config_path);
    const std::string calib = calib_path.empty() ? config.calibration_path : calib_path;
    if (calib.empty()) {
      std::cerr << "track: no calibration given (--calib or config)\n";
      return kExitBadInput;
    }
    camera = std::make_unique<uts::CameraModel>(uts::CameraModel::load(calib));
    const std::string mask_file = mask_path.empty() ? config.mask_path : mask_path;
    if (!mask_file.empty()) mask = uts::SceneMask::load(mask_file);
    priors = config.priors_path.empty() ? uts::default_priors()
                                        : uts::load_priors(config.priors_path);
  } catch (const std::exception& e) {
    std::cerr << "track: bad inputs: " << e.what() << "\n";
    return kExitBadInput;
  }

  try {
    const uts::RunSummary s =
        uts::run_sequence(config, *camera, mask, priors, det_path, out_path);
    std::printf("frames: %d\n", s.frames);
    std::printf("tracks created: %d  confirmed: %d  dead: %d\n",
                s.tracks_created, s.tracks_confirmed, s.tracks_dead);
    std::printf("mean per-frame latency: %.3f ms\n", s.mean_frame_ms);
    if (s.parse_warnings > 0) {
      std::printf("warnings: %d input lines skipped\n", s.parse_warnings);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "track: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_synth(const std::string& scenario_path, uint64_t seed,
              const std::string& out_det, const std::string& out_truth,
              const std::string& out_calib, const std::string& out_mask) {
  uts::Scenario scenario{uts::make_lookat_camera({0, 0, 8}, {10, 0, 0}, 1000, 960, 600)};
  try {
    scenario = uts::Scenario::load(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "synth: bad scenario: " << e.what() << "\n";
    return kExitBadInput;
  }
  try {
    const auto truth = uts::generate_truth(scenario);
    const auto dets = uts::render_detections(scenario, truth, seed);
    write_file(out_det, uts::detections_to_jsonl(dets));
    write_file(out_truth, uts::truth_to_jsonl(truth));
    if (!out_calib.empty()) write_file(out_calib, uts::camera_to_json(scenario.camera));
    if (!out_mask.empty()) write_file(out_mask, uts::mask_to_json(scenario.mask));
    std::printf("truth boxes: %zu  detections: %zu\n", truth.size(), dets.size());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "synth: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_eval(const std::string& tracks_path, const std::string& truth_path,
             double iou_threshold, const std::string& out_path,
             const std::string& calib_path, const std::string& mask_path) {
  std::vector<uts::TrackOutputRecord> records;
  std::vector<uts::TruthBox> truth;
  std::unique_ptr<uts::CameraModel> camera;
  uts::SceneMask mask;
  try {
    records = uts::load_records(tracks_path);
    truth = uts::load_truth(truth_path);
    if (!calib_path.empty()) {
      camera = std::make_unique<uts::CameraModel>(uts::CameraModel::load(calib_path));
    }
    if (!mask_path.empty()) mask = uts::SceneMask::load(mask_path);
  } catch (const std::exception& e) {
    std::cerr << "eval: bad inputs: " << e.what() << "\n";
    return kExitBadInput;
  }

  try {
    const auto frames =
        uts::build_eval_frames(records, truth, camera.get(),
                               camera ? &mask : nullptr);
    std::vector<double> thresholds = {0.5, 0.25, 0.1};
    if (std::find(thresholds.begin(), thresholds.end(), iou_threshold) ==
        thresholds.end()) {
      thresholds.push_back(iou_threshold);
    }
    const auto reports = uts::threshold_sweep(frames, thresholds);

    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) {
      nlohmann::json e;
      e["iou_threshold"] = r.iou_threshold;
      e["mota"] = r.mota;
      e["mostly_tracked"] = r.mostly_tracked;
      e["partly_tracked"] = r.partly_tracked;
      e["mostly_lost"] = r.mostly_lost;
      e["false_positives"] = r.false_positives;
      e["false_negatives"] = r.false_negatives;
      e["id_switches"] = r.id_switches;
      e["total_truth_boxes"] = r.total_truth_boxes;
      e["truth_tracks"] = r.truth_track_count;
      j.push_back(e);
    }
    write_file(out_path, j.dump(2) + "\n");
    std::fputs(uts::format_report_table(reports).c_str(), stdout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UTS: 3D vehicle tracking from 2D detections"};
  app.require_subcommand(1);

  std::string calib, detections, mask, config, out;
  auto* track = app.add_subcommand("track", "run the tracker over a detections file");
  track->add_option("--calib", calib, "calibration JSON file");
  track->add_option("--detections", detections, "detections JSON Lines file")->required();
  track->add_option("--mask", mask, "scene mask JSON file");
  track->add_option("--config", config, "pipeline config JSON file");
  track->add_option("--out", out, "output tracks JSON Lines file")->required();

  std::string scenario, out_det, out_truth, out_calib, out_mask;
  uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "render a synthetic scenario");
  synth->add_option("--scenario", scenario, "scenario JSON file")->required();
  synth->add_option("--seed", seed, "noise seed");
  synth->add_option("--out-detections", out_det, "output detections file")->required();
  synth->add_option("--out-truth", out_truth, "output truth file")->required();
  synth->add_option("--out-calib", out_calib, "also write the camera calibration");
  synth->add_option("--out-mask", out_mask, "also write the scene mask");

  std::string tracks_path, truth_path, eval_out, eval_calib, eval_mask;
  double iou_threshold = 0.25;
  auto* eval = app.add_subcommand("eval", "score tracks against ground truth");
  eval->add_option("--tracks", tracks_path, "tracks JSON Lines file")->required();
  eval->add_option("--truth", truth_path, "truth JSON Lines file")->required();
  eval->add_option("--iou-threshold", iou_threshold, "matching threshold");
  eval->add_option("--out", eval_out, "output report JSON file")->required();
  eval->add_option("--calib", eval_calib,
                   "calibration file; with --mask, restricts truth to the detection area");
  eval->add_option("--mask", eval_mask, "scene mask file for truth filtering");

  CLI11_PARSE(app, argc, argv);

  if (track->parsed()) return run_track(calib, detections, mask, config, out);
  if (synth->parsed()) {
    return run_synth(scenario, seed, out_det, out_truth, out_calib, out_mask);
  }
  return run_eval(tracks_path, truth_path, iou_threshold, eval_out, eval_calib,
                  eval_mask);
}
