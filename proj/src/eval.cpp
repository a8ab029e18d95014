#include "uts/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "uts/association.hpp"

namespace uts {

namespace {

using Poly2 = std::vector<Eigen::Vector2d>;

// Footprint corners in counterclockwise order.
Poly2 footprint(const OrientedBox3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.shape.x();
  const double hw = 0.5 * box.shape.y();
  const Eigen::Vector2d ctr = box.center.head<2>();
  auto pt = [&](double dx, double dy) {
    return Eigen::Vector2d(ctr.x() + c * dx - s * dy, ctr.y() + s * dx + c * dy);
  };
  return {pt(hl, hw), pt(-hl, hw), pt(-hl, -hw), pt(hl, -hw)};
}

double polygon_area(const Poly2& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of `subject` against the CCW convex polygon `clip`.
Poly2 clip_convex(Poly2 subject, const Poly2& clip) {
  const size_t n = clip.size();
  for (size_t i = 0; i < n && !subject.empty(); ++i) {
    const Eigen::Vector2d a = clip[i];
    const Eigen::Vector2d b = clip[(i + 1) % n];
    const Eigen::Vector2d e = b - a;
    auto side = [&](const Eigen::Vector2d& p) {
      return e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
    };
    Poly2 out;
    const size_t m = subject.size();
    for (size_t k = 0; k < m; ++k) {
      const Eigen::Vector2d& p = subject[k];
      const Eigen::Vector2d& q = subject[(k + 1) % m];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
        out.push_back(p + sp / (sp - sq) * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace

double footprint_intersection_area(const OrientedBox3D& a, const OrientedBox3D& b) {
  const Poly2 inter = clip_convex(footprint(a), footprint(b));
  if (inter.size() < 3) return 0.0;
  const double area = polygon_area(inter);
  return area < 1e-12 ? 0.0 : area;
}

double iou_3d(const OrientedBox3D& a, const OrientedBox3D& b) {
  const double zlo = std::max(a.center.z() - 0.5 * a.shape.z(),
                              b.center.z() - 0.5 * b.shape.z());
  const double zhi = std::min(a.center.z() + 0.5 * a.shape.z(),
                              b.center.z() + 0.5 * b.shape.z());
  const double dz = zhi - zlo;
  if (dz <= 0.0) return 0.0;

  const double inter = footprint_intersection_area(a, b) * dz;
  if (inter <= 0.0) return 0.0;
  const double vol_a = a.shape.prod();
  const double vol_b = b.shape.prod();
  return inter / (vol_a + vol_b - inter);
}

FrameMatching match_frame(const EvalFrame& frame, double iou_threshold) {
  FrameMatching out;
  out.frame = frame.frame;
  const int n = int(frame.tracks.size());
  const int m = int(frame.truths.size());

  if (n > 0 && m > 0) {
    Eigen::MatrixXd cost(n, m);
    Eigen::MatrixXd iou(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        iou(i, j) = iou_3d(frame.tracks[i].box, frame.truths[j].box);
        cost(i, j) = 1.0 - iou(i, j);
      }
    }
    for (const auto& [i, j] : assign(cost)) {
      if (iou(i, j) >= iou_threshold) out.matches.emplace_back(i, j);
    }
  }
  out.false_positives = n - int(out.matches.size());
  out.false_negatives = m - int(out.matches.size());
  return out;
}

EvalReport compute_metrics(const std::vector<EvalFrame>& frames,
                           double iou_threshold) {
  EvalReport rep;
  rep.iou_threshold = iou_threshold;

  std::map<int, int> truth_frames;   // truth id -> frames present
  std::map<int, int> truth_matched;  // truth id -> frames matched
  // Matched track id per truth in the previous frame of the sequence;
  // absent when the truth was unmatched there.
  std::map<int, int> prev_matched_id;

  for (const auto& frame : frames) {
    const FrameMatching m = match_frame(frame, iou_threshold);
    rep.false_positives += m.false_positives;
    rep.false_negatives += m.false_negatives;
    rep.total_truth_boxes += int(frame.truths.size());

    std::map<int, int> cur_matched_id;
    for (const auto& [ti, gi] : m.matches) {
      const int truth_id = frame.truths[gi].id;
      const int track_id = frame.tracks[ti].id;
      cur_matched_id[truth_id] = track_id;
      truth_matched[truth_id] += 1;
      auto it = prev_matched_id.find(truth_id);
      if (it != prev_matched_id.end() && it->second != track_id) {
        rep.id_switches += 1;
      }
    }
    for (const auto& t : frame.truths) truth_frames[t.id] += 1;
    prev_matched_id = std::move(cur_matched_id);
  }

  if (rep.total_truth_boxes == 0) {
    throw EmptyGroundTruth("sequence contains no ground truth boxes");
  }

  rep.mota = 1.0 - double(rep.false_positives + rep.false_negatives +
                          rep.id_switches) /
                       double(rep.total_truth_boxes);

  rep.truth_track_count = int(truth_frames.size());
  int mt = 0, ml = 0;
  for (const auto& [id, total] : truth_frames) {
    const double coverage = double(truth_matched[id]) / double(total);
    rep.per_track_coverage[id] = coverage;
    if (coverage > 0.8) {
      ++mt;
    } else if (coverage < 0.2) {
      ++ml;
    }
  }
  rep.mostly_tracked = double(mt) / rep.truth_track_count;
  rep.mostly_lost = double(ml) / rep.truth_track_count;
  rep.partly_tracked = 1.0 - rep.mostly_tracked - rep.mostly_lost;
  return rep;
}

std::vector<EvalReport> threshold_sweep(const std::vector<EvalFrame>& frames,
                                        const std::vector<double>& thresholds) {
  std::vector<EvalReport> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(compute_metrics(frames, t));
  return out;
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "IoU thresh.      MOTA  Mostly Tracked  Partly Tracked  Mostly Lost\n";
  char line[160];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%11.2f  %8.6f  %14.6f  %14.6f  %11.6f\n",
                  r.iou_threshold, r.mota, r.mostly_tracked, r.partly_tracked,
                  r.mostly_lost);
    os << line;
  }
  return os.str();
}

}  // namespace uts
