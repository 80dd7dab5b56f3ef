#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "ras/graph.hpp"

namespace ras {

// Intervals whose gap is at most this are merged into one block.
inline constexpr double kBlockMergeTolerance = 1e-12;

struct Block {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x, double tol = kBlockMergeTolerance) const { return x >= lo - tol && x <= hi + tol; }
};

/// Maximal intervals of the union of embedded edges, sorted by lo.
inline std::vector<Block> compute_blocks(std::span<const double> values, const Graph& graph) {
  std::vector<Block> spans;
  spans.reserve(graph.edge_count());
  for (const Edge& e : graph.edges()) {
    double a = values[e.u];
    double b = values[e.v];
    spans.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(spans.begin(), spans.end(), [](const Block& x, const Block& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
  });
  std::vector<Block> out;
  for (const Block& s : spans) {
    if (!out.empty() && s.lo <= out.back().hi + kBlockMergeTolerance) {
      out.back().hi = std::max(out.back().hi, s.hi);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

inline double max_block_length(std::span<const Block> blocks) {
  double m = 0.0;
  for (const Block& b : blocks) m = std::max(m, b.length());
  return m;
}

/// Index of the block that contains the interval of edge (u, v), or
/// blocks.size() when the graph places no edge there.
inline std::size_t block_of_edge(std::span<const Block> blocks, std::span<const double> values, const Edge& e) {
  double lo = std::min(values[e.u], values[e.v]);
  // Last block with block.lo <= lo; ties at a shared endpoint go to the lower block.
  auto it = std::upper_bound(blocks.begin(), blocks.end(), lo + kBlockMergeTolerance,
                             [](double x, const Block& b) { return x < b.lo; });
  if (it == blocks.begin()) return blocks.size();
  --it;
  return static_cast<std::size_t>(it - blocks.begin());
}

/// Length of the block holding the edges of vertex i's component; 0 for an
/// isolated vertex.
inline double containing_block_length(std::span<const Block> blocks, std::span<const double> values,
                                      const Graph& graph, std::size_t i) {
  auto nb = graph.neighbors(i);
  if (nb.empty()) return 0.0;
  std::size_t k = block_of_edge(blocks, values, Edge(i, nb.front()));
  return k < blocks.size() ? blocks[k].length() : 0.0;
}

}  // namespace ras
