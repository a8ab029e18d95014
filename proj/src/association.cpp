#include "uts/association.hpp"

#include <algorithm>
#include <limits>

#include "uts/dynamics.hpp"

namespace uts {

VehicleClass Track::majority_class() const {
  // Ties resolved CAR > TRUCK > BUS.
  const VehicleClass order[3] = {VehicleClass::CAR, VehicleClass::TRUCK,
                                 VehicleClass::BUS};
  VehicleClass best = VehicleClass::CAR;
  int best_votes = -1;
  for (VehicleClass c : order) {
    auto it = class_votes.find(c);
    const int votes = (it == class_votes.end()) ? 0 : it->second;
    if (votes > best_votes) {
      best = c;
      best_votes = votes;
    }
  }
  return best;
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.r, b.r) - std::max(a.l, b.l);
  const double ih = std::min(a.b, b.b) - std::max(a.t, b.t);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

namespace {

// O(n^3) Hungarian algorithm with row/column potentials on a square matrix.
// Returns row -> column.
std::vector<int> hungarian_square(const Eigen::MatrixXd& a) {
  const int n = int(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<std::pair<int, int>> assign(const Eigen::MatrixXd& cost) {
  const int n = int(cost.rows());
  const int m = int(cost.cols());
  if (n == 0 || m == 0) return {};
  const int dim = std::max(n, m);

  Eigen::MatrixXd padded = Eigen::MatrixXd::Constant(dim, dim, kAssignSentinel);
  padded.topLeftCorner(n, m) = cost;

  const std::vector<int> row_to_col = hungarian_square(padded);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[i];
    if (j < m && cost(i, j) < kAssignSentinel) out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::pair<size_t, size_t>> step_lifecycle(
    std::vector<Track>& tracks, const std::vector<Detection>& detections,
    const std::vector<std::pair<int, int>>& matches, double t_now,
    const LifecycleConfig& config, int& next_track_id) {
  std::vector<char> track_matched(tracks.size(), 0);
  std::vector<char> det_matched(detections.size(), 0);

  for (const auto& [ti, di] : matches) {
    Track& tr = tracks[ti];
    const Detection& det = detections[di];
    track_matched[ti] = 1;
    det_matched[di] = 1;
    tr.hits += 1;
    tr.consecutive_misses = 0;
    if (det.class_label != VehicleClass::OTHER) tr.class_votes[det.class_label] += 1;
    if (det.fully_valid()) {
      if (!tr.first_valid_detection) tr.first_valid_detection = det;
      tr.last_valid_detection = det;
    }
    if (tr.status == TrackStatus::Tentative && tr.hits >= config.confirm_hits) {
      tr.status = TrackStatus::Confirmed;
    }
  }

  for (size_t i = 0; i < tracks.size(); ++i) {
    if (track_matched[i] || tracks[i].status == TrackStatus::Dead) continue;
    tracks[i].consecutive_misses += 1;
    if (tracks[i].consecutive_misses >= config.max_misses) {
      tracks[i].status = TrackStatus::Dead;
    }
  }

  std::vector<std::pair<size_t, size_t>> created;
  for (size_t d = 0; d < detections.size(); ++d) {
    if (det_matched[d]) continue;
    Track tr;
    tr.id = next_track_id++;
    tr.stage = TrackStage::TwoD;
    tr.status = TrackStatus::Tentative;
    tr.hits = 1;
    tr.last_time = t_now;
    const Detection& det = detections[d];
    if (det.class_label != VehicleClass::OTHER) tr.class_votes[det.class_label] = 1;
    if (det.fully_valid()) {
      tr.first_valid_detection = det;
      tr.last_valid_detection = det;
    }
    created.emplace_back(tracks.size(), d);
    tracks.push_back(std::move(tr));
  }
  return created;
}

}  // namespace uts
