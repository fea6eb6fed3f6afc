#include "ost/exact_ot.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "ost/error.hpp"

namespace ost {

namespace {

// Residual mass below this is treated as exhausted.
constexpr double kMassEps = 1e-15;

}  // namespace

ExactOtResult exact_ot_oracle(const CostMatrix& cost, const Marginals& marginals) {
  const std::size_t t = cost.rows();
  const std::size_t n = cost.cols();
  if (t * n > kExactOtMaxCells) {
    throw SizeError("exact OT oracle is limited to T*N <= " + std::to_string(kExactOtMaxCells) +
                    ", got " + std::to_string(t) + "x" + std::to_string(n));
  }
  if (marginals.mu().size() != t || marginals.nu().size() != n) {
    throw DimensionError("cost and marginals shapes differ");
  }

  std::vector<double> supply(marginals.mu().begin(), marginals.mu().end());
  std::vector<double> demand(marginals.nu().begin(), marginals.nu().end());
  Matrix flow(t, n, 0.0);

  // Node layout for the shortest-path search: rows 0..t-1, columns t..t+n-1.
  // The super source / sink are implicit: every row with supply left is a
  // start, every column with demand left is an end.
  const std::size_t nodes = t + n;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);

  // Each augmentation exhausts a supply, a demand or a reverse edge; the
  // bound only guards against float pathologies.
  const std::size_t max_augment = 16 * (nodes + 1) * (t * n + 1);
  for (std::size_t round = 0;; ++round) {
    if (round > max_augment) throw NumericError("exact OT oracle failed to terminate");

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), kNone);
    bool any_supply = false;
    for (std::size_t i = 0; i < t; ++i) {
      if (supply[i] > kMassEps) {
        dist[i] = 0.0;
        any_supply = true;
      }
    }
    if (!any_supply) break;

    // Bellman-Ford over the residual graph: forward row->col edges are
    // uncapacitated with cost C, reverse col->row edges exist where flow > 0
    // and cost -C.
    for (std::size_t pass = 0; pass < nodes; ++pass) {
      bool changed = false;
      for (std::size_t i = 0; i < t; ++i) {
        if (dist[i] == kInf) continue;
        for (std::size_t j = 0; j < n; ++j) {
          const double d = dist[i] + cost(i, j);
          if (d < dist[t + j] - 1e-15) {
            dist[t + j] = d;
            parent[t + j] = i;
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (dist[t + j] == kInf) continue;
        for (std::size_t i = 0; i < t; ++i) {
          if (flow(i, j) <= kMassEps) continue;
          const double d = dist[t + j] - cost(i, j);
          if (d < dist[i] - 1e-15) {
            dist[i] = d;
            parent[i] = t + j;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }

    std::size_t sink_col = kNone;
    for (std::size_t j = 0; j < n; ++j) {
      if (demand[j] > kMassEps && dist[t + j] < kInf &&
          (sink_col == kNone || dist[t + j] < dist[t + sink_col] - 1e-15)) {
        sink_col = j;
      }
    }
    if (sink_col == kNone) break;

    // Walk back to the start row, collecting the bottleneck.
    double push = demand[sink_col];
    std::size_t v = t + sink_col;
    while (parent[v] != kNone) {
      const std::size_t u = parent[v];
      if (u >= t) push = std::min(push, flow(v, u - t));  // reverse edge col u -> row v
      v = u;
    }
    push = std::min(push, supply[v]);

    demand[sink_col] -= push;
    v = t + sink_col;
    while (parent[v] != kNone) {
      const std::size_t u = parent[v];
      if (u < t) {
        flow(u, v - t) += push;
      } else {
        flow(v, u - t) -= push;
      }
      v = u;
    }
    supply[v] -= push;
  }

  for (double& f : flow.data())
    if (f < 0.0) f = 0.0;
  return ExactOtResult{flow, transport_cost(flow, cost)};
}

}  // namespace ost
