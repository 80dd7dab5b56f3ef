#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ras {

/// Undirected edge stored with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;

  Edge() = default;
  Edge(std::size_t a, std::size_t b) : u(std::min(a, b)), v(std::max(a, b)) {}

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), count_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  // Returns true when the call merged two distinct sets.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --count_;
    return true;
  }

  std::size_t count() const { return count_; }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t count_;
};

/// Simple undirected loopless graph on vertices [0, n).
///
/// Edges are kept sorted and unique; adjacency and the component partition
/// are computed once at construction.
class Graph {
 public:
  Graph() = default;

  explicit Graph(std::size_t n, std::vector<Edge> edges = {}) : n_(n), edges_(std::move(edges)) {
    for (const Edge& e : edges_) {
      if (e.u == e.v) throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(e.u));
      if (e.v >= n_) {
        throw std::invalid_argument("graph: edge endpoint " + std::to_string(e.v) + " outside [0, " +
                                    std::to_string(n_) + ")");
      }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build();
  }

  std::size_t n() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {adj_.data() + offset_[i], offset_[i + 1] - offset_[i]};
  }
  std::size_t degree(std::size_t i) const { return offset_[i + 1] - offset_[i]; }
  std::size_t max_degree() const {
    std::size_t d = 0;
    for (std::size_t i = 0; i < n_; ++i) d = std::max(d, degree(i));
    return d;
  }

  bool has_edge(std::size_t a, std::size_t b) const {
    if (a == b) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
  }

  std::size_t component_count() const { return component_count_; }
  std::size_t component_of(std::size_t i) const { return component_[i]; }

  // Components ordered by their smallest vertex; members ascending.
  std::vector<std::vector<std::size_t>> components() const {
    std::vector<std::vector<std::size_t>> out(component_count_);
    for (std::size_t i = 0; i < n_; ++i) out[component_[i]].push_back(i);
    return out;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  void build() {
    offset_.assign(n_ + 1, 0);
    for (const Edge& e : edges_) {
      ++offset_[e.u + 1];
      ++offset_[e.v + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) offset_[i + 1] += offset_[i];
    adj_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
    for (const Edge& e : edges_) {
      adj_[fill[e.u]++] = e.v;
      adj_[fill[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < n_; ++i) std::sort(adj_.begin() + offset_[i], adj_.begin() + offset_[i + 1]);

    UnionFind uf(n_);
    for (const Edge& e : edges_) uf.unite(e.u, e.v);
    component_.assign(n_, 0);
    std::vector<std::size_t> label(n_, n_);
    component_count_ = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t root = uf.find(i);
      if (label[root] == n_) label[root] = component_count_++;
      component_[i] = label[root];
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offset_{0};
  std::vector<std::size_t> adj_;
  std::vector<std::size_t> component_;
  std::size_t component_count_ = 0;
};

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, std::move(edges));
}

// rows x cols lattice, vertex id = row * cols + col.
inline Graph grid_graph(std::size_t rows, std::size_t cols) {
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  }
  return Graph(rows * cols, std::move(edges));
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

}  // namespace ras
