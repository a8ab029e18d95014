#pragma once

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "uts/detection.hpp"
#include "uts/estimation.hpp"
#include "uts/geometry.hpp"

namespace uts {

enum class TrackStage { TwoD, ThreeD };
enum class TrackStatus { Tentative, Confirmed, Dead };

struct TrackSnapshot {
  double timestamp;
  TrackStage stage;
  Eigen::VectorXd mean;
  Box2D box;
};

struct Track {
  int id = 0;
  TrackStage stage = TrackStage::TwoD;
  TrackStatus status = TrackStatus::Tentative;
  GaussianState state;  // dim 10 (2D stage) or 8 (3D stage)
  double last_time = 0.0;
  int hits = 0;
  int consecutive_misses = 0;
  std::map<VehicleClass, int> class_votes;
  std::vector<TrackSnapshot> history;
  std::optional<Detection> first_valid_detection;
  std::optional<Detection> last_valid_detection;

  VehicleClass majority_class() const;
};

/// Standard area IoU of two axis-aligned boxes.
double iou_2d(const Box2D& a, const Box2D& b);

/// Sentinel cost for forbidden pairs and rectangular padding.
constexpr double kAssignSentinel = 1e9;

/// Minimum-total-cost one-to-one assignment of the rectangular cost matrix
/// (Hungarian algorithm). Pairs whose cost reaches the sentinel are dropped.
std::vector<std::pair<int, int>> assign(const Eigen::MatrixXd& cost);

struct LifecycleConfig {
  int confirm_hits = 3;
  int max_misses = 5;
};

/// Bookkeeping after association: matched tracks register a hit and a class
/// vote, unmatched tracks coast, unmatched detections spawn new tentative 2D
/// tracks. Filter updates are the pipeline's job. Returns (track index inside
/// `tracks`, detection index) for each created track.
std::vector<std::pair<size_t, size_t>> step_lifecycle(
    std::vector<Track>& tracks, const std::vector<Detection>& detections,
    const std::vector<std::pair<int, int>>& matches, double t_now,
    const LifecycleConfig& config, int& next_track_id);

}  // namespace uts
