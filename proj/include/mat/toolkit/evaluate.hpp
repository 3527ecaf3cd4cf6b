#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mat/assign.hpp"
#include "mat/core.hpp"
#include "mat/track.hpp"

namespace mat::toolkit {

struct SequenceMetrics {
  std::string name;
  double mota = 0.0;
  double idf1 = 0.0;
  long fp = 0;
  long fn = 0;
  long ids = 0;
  long gt_boxes = 0;
  long hyp_boxes = 0;
  long matches = 0;
  long idtp = 0;
};

struct EvalReport {
  double mota = 0.0;
  double idf1 = 0.0;
  long fp = 0;
  long fn = 0;
  long ids = 0;
  long gt_boxes = 0;
  long hyp_boxes = 0;
  std::vector<SequenceMetrics> sequences;
};

namespace detail {

using FrameBoxes = std::map<FrameIndex, std::vector<std::pair<TrackId, BoundingBox>>>;

inline FrameBoxes by_frame(const std::vector<Trajectory>& trajectories) {
  FrameBoxes out;
  for (const auto& t : trajectories) {
    for (const auto& [frame, entry] : t.boxes) out[frame].emplace_back(t.id, entry.box);
  }
  for (auto& [frame, v] : out) std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

// Global one-to-one identity matching maximizing frames of agreement.
inline long identity_true_positives(const FrameBoxes& gt, const FrameBoxes& hyp, double threshold) {
  std::map<TrackId, std::size_t> gt_index, hyp_index;
  for (const auto& [f, v] : gt) {
    for (const auto& [id, b] : v) gt_index.emplace(id, 0);
  }
  for (const auto& [f, v] : hyp) {
    for (const auto& [id, b] : v) hyp_index.emplace(id, 0);
  }
  std::size_t k = 0;
  for (auto& [id, i] : gt_index) i = k++;
  k = 0;
  for (auto& [id, i] : hyp_index) i = k++;
  if (gt_index.empty() || hyp_index.empty()) return 0;

  std::vector<long> agree(gt_index.size() * hyp_index.size(), 0);
  for (const auto& [frame, gts] : gt) {
    auto it = hyp.find(frame);
    if (it == hyp.end()) continue;
    for (const auto& [gid, gbox] : gts) {
      for (const auto& [hid, hbox] : it->second) {
        if (iou(gbox, hbox) >= threshold) ++agree[gt_index[gid] * hyp_index.size() + hyp_index[hid]];
      }
    }
  }
  const long max_agree = std::max(1L, *std::max_element(agree.begin(), agree.end()));
  // All pairs admissible, so the matching is complete and minimizing the
  // normalized disagreement maximizes total agreement.
  GatedCost cost{gt_index.size(), hyp_index.size(), {}};
  for (std::size_t g = 0; g < gt_index.size(); ++g) {
    for (std::size_t h = 0; h < hyp_index.size(); ++h) {
      cost.entries.push_back({g, h, 1.0 - static_cast<double>(agree[g * hyp_index.size() + h]) / max_agree});
    }
  }
  long idtp = 0;
  for (const auto& [g, h] : km_solve(cost).matches) idtp += agree[g * hyp_index.size() + h];
  return idtp;
}

}  // namespace detail

// CLEAR-MOT counts with continuity preference plus IDF1 for one sequence.
inline SequenceMetrics evaluate_sequence(const std::vector<Trajectory>& hypotheses,
                                         const std::vector<Trajectory>& ground_truth, double iou_match_threshold = 0.5,
                                         std::string name = {}) {
  const auto gt = detail::by_frame(ground_truth);
  const auto hyp = detail::by_frame(hypotheses);
  SequenceMetrics m;
  m.name = std::move(name);
  for (const auto& [f, v] : gt) m.gt_boxes += static_cast<long>(v.size());
  for (const auto& [f, v] : hyp) m.hyp_boxes += static_cast<long>(v.size());
  if (m.gt_boxes == 0) throw InvalidArgument("evaluate: ground truth is empty");

  std::map<TrackId, TrackId> last_match;  // gt id -> hyp id it was last matched to
  std::vector<FrameIndex> frames;
  for (const auto& [f, v] : gt) frames.push_back(f);
  for (const auto& [f, v] : hyp) frames.push_back(f);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  static const std::vector<std::pair<TrackId, BoundingBox>> kNone;
  for (FrameIndex frame : frames) {
    auto git = gt.find(frame);
    auto hit = hyp.find(frame);
    const auto& gts = git == gt.end() ? kNone : git->second;
    const auto& hyps = hit == hyp.end() ? kNone : hit->second;

    std::vector<char> g_used(gts.size(), 0), h_used(hyps.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    // Keep last correspondences that are still valid.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      auto lm = last_match.find(gts[g].first);
      if (lm == last_match.end()) continue;
      for (std::size_t h = 0; h < hyps.size(); ++h) {
        if (h_used[h] || hyps[h].first != lm->second) continue;
        if (iou(gts[g].second, hyps[h].second) >= iou_match_threshold) {
          g_used[g] = h_used[h] = 1;
          pairs.emplace_back(g, h);
        }
        break;
      }
    }

    std::vector<std::size_t> g_rest, h_rest;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!g_used[g]) g_rest.push_back(g);
    }
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      if (!h_used[h]) h_rest.push_back(h);
    }
    GatedCost cost{g_rest.size(), h_rest.size(), {}};
    for (std::size_t i = 0; i < g_rest.size(); ++i) {
      for (std::size_t j = 0; j < h_rest.size(); ++j) {
        const double o = iou(gts[g_rest[i]].second, hyps[h_rest[j]].second);
        if (o >= iou_match_threshold && o > 0.0) cost.entries.push_back({i, j, 1.0 - o});
      }
    }
    for (const auto& [i, j] : km_solve(cost).matches) {
      const std::size_t g = g_rest[i];
      const std::size_t h = h_rest[j];
      auto lm = last_match.find(gts[g].first);
      if (lm != last_match.end() && lm->second != hyps[h].first) ++m.ids;
      g_used[g] = h_used[h] = 1;
      pairs.emplace_back(g, h);
    }

    for (const auto& [g, h] : pairs) last_match[gts[g].first] = hyps[h].first;
    m.matches += static_cast<long>(pairs.size());
    m.fn += static_cast<long>(gts.size() - pairs.size());
    m.fp += static_cast<long>(hyps.size() - pairs.size());
  }

  m.mota = 1.0 - static_cast<double>(m.fp + m.fn + m.ids) / static_cast<double>(m.gt_boxes);
  m.idtp = detail::identity_true_positives(gt, hyp, iou_match_threshold);
  m.idf1 = 2.0 * static_cast<double>(m.idtp) / static_cast<double>(m.gt_boxes + m.hyp_boxes);
  return m;
}

inline EvalReport aggregate(std::vector<SequenceMetrics> sequences) {
  EvalReport r;
  long idtp = 0;
  for (const auto& s : sequences) {
    r.fp += s.fp;
    r.fn += s.fn;
    r.ids += s.ids;
    r.gt_boxes += s.gt_boxes;
    r.hyp_boxes += s.hyp_boxes;
    idtp += s.idtp;
  }
  if (r.gt_boxes == 0) throw InvalidArgument("evaluate: ground truth is empty");
  r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.ids) / static_cast<double>(r.gt_boxes);
  r.idf1 = 2.0 * static_cast<double>(idtp) / static_cast<double>(r.gt_boxes + r.hyp_boxes);
  r.sequences = std::move(sequences);
  return r;
}

inline EvalReport evaluate(const std::vector<Trajectory>& hypotheses, const std::vector<Trajectory>& ground_truth,
                           double iou_match_threshold = 0.5) {
  return aggregate({evaluate_sequence(hypotheses, ground_truth, iou_match_threshold)});
}

}  // namespace mat::toolkit
