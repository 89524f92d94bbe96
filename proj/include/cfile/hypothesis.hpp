#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "cfile/geometry.hpp"
#include "cfile/inference.hpp"

namespace cfile {

inline constexpr std::size_t kDefaultMaxHypotheses = 2000;

// A corner that lands within a hair of a pixel center can leave that single
// pixel 4-isolated from its region; such specks do not break connectivity.
inline constexpr int kMaxSpeckPixels = 2;

/// Geometric realizability of a layout on a dims-sized image: ceiling above
/// floor at the center column, l3 left of l4 and v between them at v's row,
/// v between l1 and l2, and a consistent labeling with 4-connected classes
/// (up to corner specks).
inline bool validate_hypothesis(const LayoutModel& L, ImageSize dims) {
  if (!L.v.is_finite()) return false;
  const Vec2 v = L.v.euclidean();
  const double cx = 0.5 * (dims.width - 1);
  const auto& l1 = L.lines[0];
  const auto& l2 = L.lines[1];
  const auto& l3 = L.lines[2];
  const auto& l4 = L.lines[3];
  auto y_of = [](const std::optional<Line>& l, double x) { return l ? l->y_at(x) : std::nullopt; };
  auto x_of = [](const std::optional<Line>& l, double y) { return l ? l->x_at(y) : std::nullopt; };
  if ((l1 && !l1->y_at(cx)) || (l2 && !l2->y_at(cx))) return false;  // vertical ceiling/floor
  if ((l3 && !l3->x_at(v.y)) || (l4 && !l4->x_at(v.y))) return false;  // horizontal walls
  if (l1 && l2 && !(*y_of(l1, cx) < *y_of(l2, cx))) return false;       // (a)
  if (l1 && !(*y_of(l1, v.x) < v.y)) return false;                      // (c)
  if (l2 && !(v.y < *y_of(l2, v.x))) return false;
  if (l3 && !(*x_of(l3, v.y) < v.x)) return false;  // (b)
  if (l4 && !(v.x < *x_of(l4, v.y))) return false;
  const CompiledLayout c(L);
  if (!c.well_formed()) return false;
  const auto runs = c.rasterize(dims.width, dims.height);
  return runs.consistent && labels_connected(runs, kMaxSpeckPixels);  // (d)
}

struct HypothesisInfo {
  double strength = 0;                     // summed support of the chosen lines
  std::array<int, 4> provenance{-1, -1, -1, -1};  // Provenance per role, -1 when absent
  std::size_t v_index = 0;
};

struct HypothesisSet {
  std::vector<LayoutModel> hypotheses;
  std::vector<HypothesisInfo> info;
  std::map<std::string, int> topology_counts;    // presence pattern -> count
  std::map<std::string, int> provenance_counts;  // e.g. "o-uo" (o/c/u per role, - absent)
  std::size_t considered = 0, rejected = 0;
  bool capped = false;

  std::size_t size() const { return hypotheses.size(); }
  bool empty() const { return hypotheses.empty(); }
};

inline char provenance_letter(int p) {
  return p < 0 ? '-' : "ocu"[p];  // original, occluded (c), undetected
}

/// Cartesian product of per-role choices (each candidate line or absent) with
/// the candidate v list, strongest line combinations first and v in list
/// order within a combination, filtered by validate_hypothesis and capped.
/// A role in `required` may not be absent while it has a candidate line.
inline HypothesisSet enumerate_hypotheses(const CriticalLineSet& crit, const std::vector<Point2>& candidates_v,
                                          ImageSize dims, std::size_t max_hypotheses = kDefaultMaxHypotheses,
                                          std::array<bool, 4> required = {}) {
  if (candidates_v.empty()) fail(ErrorCode::InvalidArgument, "no candidate vanishing points");
  const Vec2 ref{0.5 * (dims.width - 1), 0.5 * (dims.height - 1)};

  // per-role options without near-duplicates, priority order kept
  std::array<std::vector<RoleLine>, 4> options;
  for (auto r : kAllRoles) {
    auto& opt = options[static_cast<int>(r)];
    for (const auto& l : crit.for_role(r)) {
      const bool dup = std::any_of(opt.begin(), opt.end(),
                                   [&](const RoleLine& k) { return near_duplicate(k.line, l.line, ref); });
      if (!dup) opt.push_back(l);
    }
  }
  std::vector<Point2> vs;
  std::vector<std::size_t> v_index;
  for (std::size_t i = 0; i < candidates_v.size(); ++i) {
    const auto& p = candidates_v[i];
    const bool dup = std::any_of(vs.begin(), vs.end(), [&](const Point2& q) {
      return p.is_finite() && q.is_finite() && norm(p.euclidean() - q.euclidean()) < 1.0;
    });
    if (!dup) vs.push_back(p), v_index.push_back(i);
  }

  // line combinations: choice index per role, n = absent
  struct Combo {
    std::array<int, 4> pick;
    double strength;
  };
  std::vector<Combo> combos;
  std::array<int, 4> n;
  for (int r = 0; r < 4; ++r)
    n[r] = static_cast<int>(options[r].size()) + (required[r] && !options[r].empty() ? 0 : 1);
  const int n0 = n[0], n1 = n[1], n2 = n[2], n3 = n[3];
  for (int a = 0; a < n0; ++a)
    for (int b = 0; b < n1; ++b)
      for (int c = 0; c < n2; ++c)
        for (int d = 0; d < n3; ++d) {
          Combo cb{{a, b, c, d}, 0};
          bool any = false;
          for (int r = 0; r < 4; ++r)
            if (cb.pick[r] < static_cast<int>(options[r].size())) {
              cb.strength += options[r][cb.pick[r]].strength;
              any = true;
            }
          if (any) combos.push_back(cb);
        }
  std::stable_sort(combos.begin(), combos.end(),
                   [](const Combo& x, const Combo& y) { return x.strength > y.strength; });

  HypothesisSet H;
  for (const auto& cb : combos) {
    for (std::size_t vi = 0; vi < vs.size(); ++vi) {
      if (H.hypotheses.size() >= max_hypotheses) {
        H.capped = true;
        break;
      }
      LayoutModel L;
      L.v = vs[vi];
      HypothesisInfo info{cb.strength, {-1, -1, -1, -1}, v_index[vi]};
      std::string prov(4, '-');
      for (int r = 0; r < 4; ++r)
        if (cb.pick[r] < static_cast<int>(options[r].size())) {
          const auto& rl = options[r][cb.pick[r]];
          L.lines[r] = rl.line;
          info.provenance[r] = static_cast<int>(rl.provenance);
          prov[r] = provenance_letter(info.provenance[r]);
        }
      ++H.considered;
      if (!validate_hypothesis(L, dims)) {
        ++H.rejected;
        continue;
      }
      ++H.topology_counts[L.topology().pattern()];
      ++H.provenance_counts[prov];
      H.hypotheses.push_back(std::move(L));
      H.info.push_back(info);
    }
    if (H.capped) break;
  }
  if (H.empty()) fail(ErrorCode::NoValidHypothesis, "no valid layout hypothesis");
  return H;
}

}  // namespace cfile
