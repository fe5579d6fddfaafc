#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpdec/error.hpp"
#include "dpdec/linalg.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

// Undirected simple graph over agents 0..n-1.
class CommGraph {
 public:
  CommGraph() = default;

  CommGraph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
    if (n < 1) throw std::invalid_argument("graph needs at least one node");
    for (auto& [a, b] : edges) {
      if (a == b) throw std::invalid_argument("self loop");
      if (a > b) std::swap(a, b);
      if (a < 0 || b >= n) throw std::invalid_argument("edge endpoint out of range");
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
      throw std::invalid_argument("duplicate edge");
    edges_ = std::move(edges);
    adj_.assign(n_, {});
    for (auto [a, b] : edges_) {
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
  }

  static CommGraph complete(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return CommGraph(n, std::move(e));
  }

  static CommGraph ring(int n) {
    if (n < 3) throw std::invalid_argument("ring needs at least three nodes");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return CommGraph(n, std::move(e));
  }

  static CommGraph path(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return CommGraph(n, std::move(e));
  }

  static CommGraph star(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i < n; ++i) e.emplace_back(0, i);
    return CommGraph(n, std::move(e));
  }

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Neighbors of i, excluding i itself.
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }

  int degree(int i) const { return static_cast<int>(adj_[i].size()); }

  bool has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(a, b));
  }

  bool connected() const {
    if (n_ == 0) return false;
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj_[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n_;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto absorb = [&h](std::uint64_t v) {
      for (int k = 0; k < 8; ++k) {
        h ^= (v >> (8 * k)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    absorb(static_cast<std::uint64_t>(n_));
    for (auto [a, b] : edges_) absorb((static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b));
    return h;
  }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
};

inline Matrix laplacian(const CommGraph& g) {
  Matrix l(g.size(), g.size());
  for (int i = 0; i < g.size(); ++i) l.at(i, i) = g.degree(i);
  for (auto [a, b] : g.edges()) {
    l.at(a, b) = -1.0;
    l.at(b, a) = -1.0;
  }
  return l;
}

struct FiedlerValue {
  double absolute = 0.0;    // second smallest Laplacian eigenvalue
  double normalized = 0.0;  // absolute / n
};

inline FiedlerValue fiedler_value(const CommGraph& g) {
  if (!g.connected()) throw error(errc::disconnected, "fiedler value undefined");
  auto ev = symmetric_eigenvalues(laplacian(g));
  FiedlerValue f;
  f.absolute = ev[1];
  f.normalized = ev[1] / static_cast<double>(g.size());
  return f;
}

// Searches for a connected graph whose normalized Fiedler value is within tol
// of target. Starts from a random spanning tree and greedily adds or removes
// single edges, keeping a proposal only if it moves the value closer. Gives up
// after a fixed proposal budget.
inline CommGraph generate_graph(int n, double target, double tol, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two agents");
  if (!(target > 0.0 && target <= 1.0)) throw std::invalid_argument("target outside (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");

  auto rng = RngStream::keyed(seed, "graphgen");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<std::pair<int, int>> edges;
  for (int k = 1; k < n; ++k) {
    int parent = order[rng.below(static_cast<std::uint64_t>(k))];
    edges.emplace_back(order[k], parent);
  }

  CommGraph g(n, edges);
  double best = std::abs(fiedler_value(g).normalized - target);
  if (best <= tol) return g;

  const int budget = 10000;
  for (int move = 0; move < budget; ++move) {
    bool try_add = rng.below(2) == 0;
    auto current = g.edges();

    std::vector<std::pair<int, int>> pool;
    if (try_add) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (!g.has_edge(i, j)) pool.emplace_back(i, j);
    } else {
      pool = current;
    }
    if (pool.empty()) continue;
    auto pick = pool[rng.below(pool.size())];

    std::vector<std::pair<int, int>> candidate = current;
    if (try_add) {
      candidate.push_back(pick);
    } else {
      candidate.erase(std::find(candidate.begin(), candidate.end(), pick));
    }
    CommGraph next(n, candidate);
    if (!next.connected()) continue;

    // equal scores are accepted with numeric slack: near-complete graphs
    // plateau (any missing matching leaves the value at (n-2)/n) and the
    // walk must cross them, but the eigensolver jitters equal plateaus by
    // a few ulps, which a strict <= would freeze into a lockout
    double score = std::abs(fiedler_value(next).normalized - target);
    if (score <= best + 1e-9) {
      best = std::min(best, score);
      g = std::move(next);
      if (score <= tol) return g;
    }
  }
  std::ostringstream msg;
  msg << "no graph within " << tol << " of normalized fiedler value " << target
      << " found in " << budget << " proposals (closest " << best << ")";
  throw error(errc::target_unreachable, msg.str());
}

enum class MixingScheme { metropolis, uniform_degree };

// Symmetric doubly stochastic consensus weights. Metropolis weights work on
// any connected graph; the uniform scheme assigns 1/(d+1) to each closed
// neighborhood and is only doubly stochastic when every degree is equal.
inline Matrix build_mixing_matrix(const CommGraph& g, MixingScheme scheme) {
  const int n = g.size();
  Matrix w(n, n);
  if (scheme == MixingScheme::uniform_degree) {
    for (int i = 1; i < n; ++i)
      if (g.degree(i) != g.degree(0))
        throw error(errc::not_regular, "uniform weights need a regular graph");
    double v = 1.0 / (g.degree(0) + 1.0);
    for (int i = 0; i < n; ++i) {
      w.at(i, i) = v;
      for (int j : g.neighbors(i)) w.at(i, j) = v;
    }
    return w;
  }
  for (auto [a, b] : g.edges()) {
    double v = 1.0 / (1.0 + std::max(g.degree(a), g.degree(b)));
    w.at(a, b) = v;
    w.at(b, a) = v;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : g.neighbors(i)) off += w.at(i, j);
    w.at(i, i) = 1.0 - off;
  }
  return w;
}

inline void save_edge_list(const CommGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "agents " << g.size() << "\n";
  for (auto [a, b] : g.edges()) out << a << " " << b << "\n";
}

inline CommGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string word;
  int n = 0;
  if (!(in >> word >> n) || word != "agents")
    throw error(errc::config_invalid, "edge list must start with 'agents N'");
  std::vector<std::pair<int, int>> edges;
  int a, b;
  while (in >> a >> b) edges.emplace_back(a, b);
  return CommGraph(n, std::move(edges));
}

}  // namespace dpdec
