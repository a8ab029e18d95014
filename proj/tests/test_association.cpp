#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "uts/association.hpp"

using namespace uts;

namespace {

// Exhaustive minimum-cost assignment: every injective map of the smaller side
// into the larger one; sentinel-priced pairs stay unassigned.
std::vector<std::pair<int, int>> brute_force_assign(const Eigen::MatrixXd& cost) {
  const int n = int(cost.rows());
  const int m = int(cost.cols());
  const bool rows_small = n <= m;
  const int small = std::min(n, m);
  const int large = std::max(n, m);

  std::vector<int> perm(large);
  std::iota(perm.begin(), perm.end(), 0);

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_map;
  do {
    double total = 0.0;
    for (int i = 0; i < small; ++i) {
      const double c = rows_small ? cost(i, perm[i]) : cost(perm[i], i);
      total += std::min(c, kAssignSentinel);
    }
    if (total < best) {
      best = total;
      best_map.assign(perm.begin(), perm.begin() + small);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < small; ++i) {
    const int r = rows_small ? i : best_map[i];
    const int c = rows_small ? best_map[i] : i;
    if (cost(r, c) < kAssignSentinel) out.emplace_back(r, c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double total_cost(const Eigen::MatrixXd& cost,
                  const std::vector<std::pair<int, int>>& pairs) {
  double s = 0.0;
  for (const auto& [r, c] : pairs) s += cost(r, c);
  return s;
}

}  // namespace

TEST_CASE("iou_2d basics") {
  const Box2D a{0, 0, 10, 10};
  CHECK(iou_2d(a, a) == doctest::Approx(1.0));
  CHECK(iou_2d(a, Box2D{0, 20, 10, 30}) == doctest::Approx(0.0));
  // 5px shift in both axes: 25 overlap, 175 union.
  CHECK(iou_2d(a, Box2D{5, 5, 15, 15}) == doctest::Approx(25.0 / 175.0));
  // Touching boxes do not overlap.
  CHECK(iou_2d(a, Box2D{0, 10, 10, 20}) == doctest::Approx(0.0));
  // Containment.
  CHECK(iou_2d(a, Box2D{2, 2, 8, 8}) == doctest::Approx(36.0 / 100.0));
}

TEST_CASE("assign solves a hand-checked 3x3 problem") {
  Eigen::MatrixXd cost(3, 3);
  cost << 4, 1, 3,
          2, 0, 5,
          3, 2, 2;
  auto pairs = assign(cost);
  std::sort(pairs.begin(), pairs.end());
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0] == std::pair<int, int>(0, 1));
  CHECK(pairs[1] == std::pair<int, int>(1, 0));
  CHECK(pairs[2] == std::pair<int, int>(2, 2));  // total 1 + 2 + 2 = 5
}

TEST_CASE("assign matches exhaustive enumeration") {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> size(1, 5);
  std::uniform_real_distribution<double> forbid(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = size(rng), m = size(rng);
    Eigen::MatrixXd cost(n, m);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < m; ++c) {
        cost(r, c) = forbid(rng) < 0.2 ? kAssignSentinel : u(rng);
      }
    }
    auto got = assign(cost);
    std::sort(got.begin(), got.end());
    const auto want = brute_force_assign(cost);
    // Continuous random costs: the optimum is unique almost surely, except
    // when forbidden pairs allow several equally empty solutions.
    CHECK(got.size() == want.size());
    CHECK(total_cost(cost, got) == doctest::Approx(total_cost(cost, want)));
  }
}

TEST_CASE("assign drops sentinel pairs") {
  Eigen::MatrixXd cost =
      Eigen::MatrixXd::Constant(3, 3, kAssignSentinel);
  CHECK(assign(cost).empty());

  cost(1, 2) = 1.0;
  const auto pairs = assign(cost);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::pair<int, int>(1, 2));

  CHECK(assign(Eigen::MatrixXd(0, 0)).empty());
}

TEST_CASE("lifecycle: spawn, confirm, coast, die") {
  std::vector<Track> tracks;
  int next_id = 0;
  const LifecycleConfig cfg;  // confirm at 3 hits, dead at 5 misses

  Detection det;
  det.class_label = VehicleClass::CAR;
  det.box = {10, 10, 50, 50};

  // Frame 0: an unmatched detection spawns a tentative track.
  auto created = step_lifecycle(tracks, {det}, {}, 0.0, cfg, next_id);
  REQUIRE(created.size() == 1);
  CHECK(created[0] == std::pair<size_t, size_t>(0, 0));
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].id == 0);
  CHECK(tracks[0].status == TrackStatus::Tentative);
  CHECK(tracks[0].hits == 1);
  CHECK(tracks[0].first_valid_detection.has_value());

  // Two more matched frames confirm it.
  step_lifecycle(tracks, {det}, {{0, 0}}, 0.05, cfg, next_id);
  CHECK(tracks[0].status == TrackStatus::Tentative);
  step_lifecycle(tracks, {det}, {{0, 0}}, 0.10, cfg, next_id);
  CHECK(tracks[0].status == TrackStatus::Confirmed);
  CHECK(tracks[0].hits == 3);

  // Four misses: still alive; a hit resets the counter.
  for (int i = 0; i < 4; ++i) step_lifecycle(tracks, {}, {}, 0.15, cfg, next_id);
  CHECK(tracks[0].status == TrackStatus::Confirmed);
  CHECK(tracks[0].consecutive_misses == 4);
  step_lifecycle(tracks, {det}, {{0, 0}}, 0.35, cfg, next_id);
  CHECK(tracks[0].consecutive_misses == 0);

  // Five consecutive misses kill it.
  for (int i = 0; i < 5; ++i) step_lifecycle(tracks, {}, {}, 0.4, cfg, next_id);
  CHECK(tracks[0].status == TrackStatus::Dead);
  // Dead tracks stop accumulating misses.
  step_lifecycle(tracks, {}, {}, 0.45, cfg, next_id);
  CHECK(tracks[0].consecutive_misses == 5);
}

TEST_CASE("lifecycle records valid detections and class votes") {
  std::vector<Track> tracks;
  int next_id = 0;
  const LifecycleConfig cfg;

  Detection partial;
  partial.class_label = VehicleClass::TRUCK;
  partial.box = {10, 10, 50, 50};
  partial.edge_valid = {true, false, true, true};

  step_lifecycle(tracks, {partial}, {}, 0.0, cfg, next_id);
  CHECK_FALSE(tracks[0].first_valid_detection.has_value());
  CHECK(tracks[0].class_votes.at(VehicleClass::TRUCK) == 1);

  Detection full = partial;
  full.edge_valid = {true, true, true, true};
  full.timestamp = 0.05;
  step_lifecycle(tracks, {full}, {{0, 0}}, 0.05, cfg, next_id);
  REQUIRE(tracks[0].first_valid_detection.has_value());
  CHECK(tracks[0].first_valid_detection->timestamp == doctest::Approx(0.05));

  Detection full2 = full;
  full2.class_label = VehicleClass::CAR;
  full2.timestamp = 0.10;
  step_lifecycle(tracks, {full2}, {{0, 0}}, 0.10, cfg, next_id);
  CHECK(tracks[0].last_valid_detection->timestamp == doctest::Approx(0.10));
  // 2 TRUCK votes vs 1 CAR vote.
  step_lifecycle(tracks, {partial}, {{0, 0}}, 0.15, cfg, next_id);
  CHECK(tracks[0].majority_class() == VehicleClass::TRUCK);
}

TEST_CASE("majority_class tie-break prefers CAR over TRUCK over BUS") {
  Track tr;
  CHECK(tr.majority_class() == VehicleClass::CAR);  // no votes at all
  tr.class_votes[VehicleClass::BUS] = 2;
  tr.class_votes[VehicleClass::TRUCK] = 2;
  CHECK(tr.majority_class() == VehicleClass::TRUCK);
  tr.class_votes[VehicleClass::CAR] = 2;
  CHECK(tr.majority_class() == VehicleClass::CAR);
  tr.class_votes[VehicleClass::BUS] = 3;
  CHECK(tr.majority_class() == VehicleClass::BUS);
}
