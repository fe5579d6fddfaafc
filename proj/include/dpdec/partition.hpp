#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dpdec/dataset.hpp"
#include "dpdec/error.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

// Class-to-agent allocation. Entry (i, j) is the fraction of class j's samples
// that agent i receives. t = 0 spreads every class evenly; t = 1 hands each
// class entirely to its owner, agent j mod N. Columns always sum to one.
struct SplitMatrix {
  double t = 0.0;
  int n_agents = 0;
  int n_classes = 0;
  std::vector<double> a;  // row-major, n_agents x n_classes

  double at(int agent, int cls) const {
    return a[static_cast<std::size_t>(agent) * n_classes + cls];
  }
};

inline SplitMatrix build_split_matrix(double t, int n_agents, int n_classes) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0, 1]");
  if (n_agents < 1 || n_classes < 1) throw std::invalid_argument("need agents and classes");
  SplitMatrix m;
  m.t = t;
  m.n_agents = n_agents;
  m.n_classes = n_classes;
  m.a.resize(static_cast<std::size_t>(n_agents) * n_classes);
  double base = (1.0 - t) / n_agents;
  for (int i = 0; i < n_agents; ++i)
    for (int j = 0; j < n_classes; ++j)
      m.a[static_cast<std::size_t>(i) * n_classes + j] = base + (j % n_agents == i ? t : 0.0);
  return m;
}

// Splits data into per-agent shards following the allocation matrix. Within
// each class, fractional sample counts are resolved by largest remainder and
// the class's samples are dealt out in seeded shuffled order, so every sample
// lands in exactly one shard and reruns reproduce the same split.
inline std::vector<LabeledDataset> partition_dataset(const LabeledDataset& data,
                                                     const SplitMatrix& m, std::uint64_t seed) {
  if (data.num_classes != m.n_classes)
    throw error(errc::dimension_mismatch, "split matrix class count vs dataset");

  std::vector<LabeledDataset> shards(m.n_agents);
  for (auto& s : shards) {
    s.feature_dim = data.feature_dim;
    s.num_classes = data.num_classes;
  }

  for (int j = 0; j < m.n_classes; ++j) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < data.size(); ++s)
      if (data.labels[s] == j) members.push_back(s);
    if (members.empty())
      throw error(errc::empty_class, "class " + std::to_string(j) + " has no samples");

    auto rng = RngStream::keyed(seed, "partition", static_cast<std::uint64_t>(j));
    for (std::size_t i = members.size() - 1; i > 0; --i)
      std::swap(members[i], members[rng.below(i + 1)]);

    const long n = static_cast<long>(members.size());
    std::vector<long> counts(m.n_agents);
    std::vector<std::pair<double, int>> remainders(m.n_agents);
    long assigned = 0;
    for (int i = 0; i < m.n_agents; ++i) {
      double share = m.at(i, j) * static_cast<double>(n);
      counts[i] = static_cast<long>(std::floor(share));
      assigned += counts[i];
      remainders[i] = {share - static_cast<double>(counts[i]), i};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long r = 0; r < n - assigned; ++r) ++counts[remainders[r % m.n_agents].second];

    std::size_t cursor = 0;
    for (int i = 0; i < m.n_agents; ++i)
      for (long k = 0; k < counts[i]; ++k) {
        std::size_t s = members[cursor++];
        shards[i].append_row(data.row(s), data.labels[s]);
      }
  }
  return shards;
}

}  // namespace dpdec
