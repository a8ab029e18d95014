#pragma once

#include <map>
#include <string>
#include <vector>

#include "uts/geometry.hpp"

namespace uts {

struct EmptyGroundTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// IoU of two oriented boxes sharing the vertical axis: clipped footprint
/// area times height overlap over union volume.
double iou_3d(const OrientedBox3D& a, const OrientedBox3D& b);

/// Intersection area of two rotated rectangle footprints.
double footprint_intersection_area(const OrientedBox3D& a, const OrientedBox3D& b);

struct EvalBox {
  int id = 0;
  OrientedBox3D box;
};

/// One frame's hypotheses and ground truth.
struct EvalFrame {
  int frame = 0;
  std::vector<EvalBox> tracks;
  std::vector<EvalBox> truths;
};

struct FrameMatching {
  int frame = 0;
  std::vector<std::pair<int, int>> matches;  // (track index, truth index)
  int false_positives = 0;
  int false_negatives = 0;
};

/// Optimal per-frame matching maximizing total IoU, then filtered by the
/// threshold; leftovers count as FP (tracks) and FN (truths).
FrameMatching match_frame(const EvalFrame& frame, double iou_threshold);

struct EvalReport {
  double iou_threshold = 0.0;
  double mota = 0.0;
  double mostly_tracked = 0.0;
  double partly_tracked = 0.0;
  double mostly_lost = 0.0;
  int false_positives = 0;
  int false_negatives = 0;
  int id_switches = 0;
  int total_truth_boxes = 0;
  int truth_track_count = 0;
  std::map<int, double> per_track_coverage;
};

/// CLEAR-MOT style metrics over a full sequence. MT/ML classify truth tracks
/// matched in more than 80% / less than 20% of their frames; ID switches are
/// counted when a truth's matched id changes between adjacent frames.
EvalReport compute_metrics(const std::vector<EvalFrame>& frames,
                           double iou_threshold);

/// Runs the evaluation at each threshold (default 0.5 / 0.25 / 0.1).
std::vector<EvalReport> threshold_sweep(
    const std::vector<EvalFrame>& frames,
    const std::vector<double>& thresholds = {0.5, 0.25, 0.1});

/// Plain-text table of a sweep, one row per threshold.
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace uts
