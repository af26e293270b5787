#pragma once

#include <queue>
#include <vector>

#include "phaseless/medium.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// One connected component of {c > threshold} with 6-connectivity.
struct Component {
  real max_c = 1.0;
  Vec3 centroid;           // weighted by c - 1
  std::size_t voxels = 0;
};

struct ComponentMetrics {
  Component estimated;
  Component matched_true;
  real contrast_rel_error = 0;  // |max_est - max_true| / |max_true - 1|
  real max_rel_error = 0;       // |max_est - max_true| / max_true
  real centroid_error = 0;      // dimensionless length
};

struct Metrics {
  real max_c_true = 1.0;
  real max_c_est = 1.0;
  real contrast_rel_error = 0;
  real max_rel_error = 0;
  int true_component_count = 0;
  int estimated_component_count = 0;
  std::vector<ComponentMetrics> components;
};

inline std::vector<Component> connected_components(const Medium& m, real threshold) {
  const Grid3D& g = m.grid;
  std::vector<int> label(g.size(), -1);
  std::vector<Component> comps;
  for (std::size_t seed = 0; seed < g.size(); ++seed) {
    if (m.values[seed] <= threshold || label[seed] >= 0) continue;
    Component comp;
    real wsum = 0;
    Vec3 acc{0, 0, 0};
    std::queue<std::size_t> queue;
    queue.push(seed);
    label[seed] = int(comps.size());
    while (!queue.empty()) {
      const std::size_t idx = queue.front();
      queue.pop();
      const auto ijk = g.unindex(idx);
      const real c = m.values[idx];
      comp.max_c = std::max(comp.max_c, c);
      ++comp.voxels;
      const real w = c - 1.0;
      wsum += w;
      acc = acc + w * g.node(idx);
      const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& dd : d) {
        const int j1 = ijk[0] + dd[0], j2 = ijk[1] + dd[1], j3 = ijk[2] + dd[2];
        if (j1 < 0 || j2 < 0 || j3 < 0 || j1 >= g.n[0] || j2 >= g.n[1] || j3 >= g.n[2])
          continue;
        const std::size_t jdx = g.index(j1, j2, j3);
        if (m.values[jdx] > threshold && label[jdx] < 0) {
          label[jdx] = label[idx];
          queue.push(jdx);
        }
      }
    }
    if (wsum > 0) comp.centroid = acc * (1.0 / wsum);
    comps.push_back(comp);
  }
  return comps;
}

/// Compares an estimated coefficient against the truth on a common grid.
/// Reports both error conventions: relative to the contrast max_true - 1 and
/// relative to the maximal value itself.
inline Metrics compute_metrics(const Medium& c_true, const Medium& c_est,
                               real support_threshold = 1.2) {
  if (c_true.grid.n != c_est.grid.n || c_true.values.size() != c_est.values.size())
    throw config_error("compute_metrics: media live on different grids");

  Metrics out;
  out.max_c_true = c_true.max_value();
  out.max_c_est = c_est.max_value();
  const real contrast = std::abs(out.max_c_true - 1.0);
  out.contrast_rel_error =
      contrast > 0 ? std::abs(out.max_c_est - out.max_c_true) / contrast : 0.0;
  out.max_rel_error = std::abs(out.max_c_est - out.max_c_true) / out.max_c_true;

  const auto truth = connected_components(c_true, support_threshold);
  const auto est = connected_components(c_est, support_threshold);
  out.true_component_count = int(truth.size());
  out.estimated_component_count = int(est.size());

  for (const auto& e : est) {
    ComponentMetrics cm;
    cm.estimated = e;
    real best = -1;
    for (const auto& t : truth) {
      const real d = (t.centroid - e.centroid).norm();
      if (best < 0 || d < best) {
        best = d;
        cm.matched_true = t;
      }
    }
    if (best >= 0) {
      cm.centroid_error = best;
      const real tc = std::abs(cm.matched_true.max_c - 1.0);
      cm.contrast_rel_error =
          tc > 0 ? std::abs(e.max_c - cm.matched_true.max_c) / tc : 0.0;
      cm.max_rel_error = std::abs(e.max_c - cm.matched_true.max_c) / cm.matched_true.max_c;
    }
    out.components.push_back(cm);
  }
  return out;
}

}  // namespace phaseless
