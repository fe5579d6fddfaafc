#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dpdec/dataset.hpp"
#include "dpdec/graph.hpp"
#include "dpdec/partition.hpp"

using namespace dpdec;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("fiedler values of standard graphs") {
  auto path3 = fiedler_value(CommGraph::path(3));
  REQUIRE_THAT(path3.absolute, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(path3.normalized, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-10));

  // Complete graph: second Laplacian eigenvalue equals n.
  auto k10 = fiedler_value(CommGraph::complete(10));
  REQUIRE_THAT(k10.normalized, Catch::Matchers::WithinAbs(1.0, 1e-10));

  auto ring4 = fiedler_value(CommGraph::ring(4));
  REQUIRE_THAT(ring4.absolute, Catch::Matchers::WithinAbs(2.0, 1e-10));

  CommGraph split(4, {{0, 1}, {2, 3}});
  REQUIRE_FALSE(split.connected());
  REQUIRE_THROWS_AS(fiedler_value(split), error);
}

TEST_CASE("graph construction validates edges") {
  REQUIRE_THROWS_AS(CommGraph(3, {{0, 0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(CommGraph(3, {{0, 3}}), std::invalid_argument);
  REQUIRE_THROWS_AS(CommGraph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CommGraph g(3, {{2, 0}, {0, 1}});
  REQUIRE(g.has_edge(0, 2));
  REQUIRE(g.degree(0) == 2);
}

TEST_CASE("metropolis weights on a star match hand values") {
  Matrix w = build_mixing_matrix(CommGraph::star(4), MixingScheme::metropolis);
  // hub degree 3, leaves degree 1: edge weight 1/4
  REQUIRE_THAT(w.at(0, 1), Catch::Matchers::WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(w.at(0, 0), Catch::Matchers::WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(w.at(1, 1), Catch::Matchers::WithinAbs(0.75, 1e-12));
  REQUIRE_THAT(w.at(1, 2), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("mixing matrices are symmetric doubly stochastic with support on edges") {
  CommGraph g = generate_graph(12, 0.3, 0.05, 99);
  for (auto scheme : {MixingScheme::metropolis}) {
    Matrix w = build_mixing_matrix(g, scheme);
    for (int i = 0; i < g.size(); ++i) {
      double row = 0.0;
      for (int j = 0; j < g.size(); ++j) {
        REQUIRE(w.at(i, j) >= 0.0);
        REQUIRE(w.at(i, j) == w.at(j, i));
        if (i != j && w.at(i, j) != 0.0) REQUIRE(g.has_edge(i, j));
        row += w.at(i, j);
      }
      REQUIRE_THAT(row, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("uniform weights need a regular graph") {
  Matrix w = build_mixing_matrix(CommGraph::ring(6), MixingScheme::uniform_degree);
  REQUIRE_THAT(w.at(0, 0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(w.at(0, 1), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THROWS_AS(build_mixing_matrix(CommGraph::star(4), MixingScheme::uniform_degree), error);

  Matrix k = build_mixing_matrix(CommGraph::complete(10), MixingScheme::uniform_degree);
  REQUIRE_THAT(k.at(3, 7), Catch::Matchers::WithinAbs(0.1, 1e-12));
}

TEST_CASE("graph search reaches its target and is deterministic") {
  CommGraph a = generate_graph(10, 0.4, 0.02, 7);
  CommGraph b = generate_graph(10, 0.4, 0.02, 7);
  REQUIRE(a.edges() == b.edges());
  REQUIRE_THAT(fiedler_value(a).normalized, Catch::Matchers::WithinAbs(0.4, 0.02));

  CommGraph dense = generate_graph(8, 1.0, 1e-9, 3);
  REQUIRE(dense.edges().size() == 28);  // only the complete graph reaches 1.0

  REQUIRE_THROWS_AS(generate_graph(2, 0.3, 0.01, 1), error);
  REQUIRE_THROWS_AS(generate_graph(10, 1.5, 0.01, 1), std::invalid_argument);
}

TEST_CASE("edge lists round trip through the text format") {
  CommGraph g = generate_graph(9, 0.35, 0.05, 13);
  auto path = temp_file("dpdec_graph_test.txt");
  save_edge_list(g, path.string());

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  REQUIRE(header == "agents 9");

  CommGraph back = load_edge_list(path.string());
  REQUIRE(back.size() == g.size());
  REQUIRE(back.edges() == g.edges());

  std::ofstream bad(path);
  bad << "nodes 4\n0 1\n";
  bad.close();
  REQUIRE_THROWS_AS(load_edge_list(path.string()), error);
  std::filesystem::remove(path);
}

TEST_CASE("idx files round trip with an exact header") {
  std::vector<std::uint8_t> pixels = {0, 51, 102, 153, 204, 255, 10, 20, 30,
                                      1,  2,   3,   4,   5,   6,  7,  8,  9};
  std::vector<std::uint8_t> labels = {4, 9};
  auto img_path = temp_file("dpdec_test_images");
  auto lab_path = temp_file("dpdec_test_labels");
  save_idx_images(img_path.string(), 3, 3, pixels);
  save_idx_labels(lab_path.string(), labels);

  std::ifstream raw(img_path, std::ios::binary);
  std::vector<unsigned char> head(16);
  raw.read(reinterpret_cast<char*>(head.data()), 16);
  REQUIRE(head[2] == 0x08);
  REQUIRE(head[3] == 0x03);
  REQUIRE(head[7] == 2);   // count, big-endian
  REQUIRE(head[11] == 3);  // rows
  REQUIRE(head[15] == 3);  // cols

  LabeledDataset d = load_idx_dataset(img_path.string(), lab_path.string());
  REQUIRE(d.size() == 2);
  REQUIRE(d.feature_dim == 9);
  REQUIRE(d.labels[0] == 4);
  REQUIRE(d.labels[1] == 9);
  REQUIRE_THAT(d.row(0)[1], Catch::Matchers::WithinAbs(51.0 / 255.0, 1e-12));
  REQUIRE_THAT(d.row(1)[8], Catch::Matchers::WithinAbs(9.0 / 255.0, 1e-12));

  std::filesystem::remove(img_path);
  std::filesystem::remove(lab_path);
}

TEST_CASE("idx loader rejects malformed files") {
  auto img_path = temp_file("dpdec_bad_images");
  auto lab_path = temp_file("dpdec_bad_labels");
  std::vector<std::uint8_t> pixels(18, 7);
  std::vector<std::uint8_t> labels = {1, 2};
  save_idx_images(img_path.string(), 3, 3, pixels);
  save_idx_labels(lab_path.string(), labels);

  // a label file where an image file is expected
  REQUIRE_THROWS_MATCHES(load_idx_dataset(lab_path.string(), lab_path.string()), error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::StartsWith("BAD_MAGIC")));

  // count mismatch
  save_idx_labels(lab_path.string(), {1, 2, 3});
  REQUIRE_THROWS_MATCHES(load_idx_dataset(img_path.string(), lab_path.string()), error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::StartsWith("COUNT_MISMATCH")));

  // truncated payload
  save_idx_labels(lab_path.string(), {1, 2});
  {
    std::ofstream out(img_path, std::ios::binary | std::ios::trunc);
    unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3};
    out.write(reinterpret_cast<char*>(header), 16);
    out.write("short", 5);
  }
  REQUIRE_THROWS_MATCHES(load_idx_dataset(img_path.string(), lab_path.string()), error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::StartsWith("TRUNCATED_FILE")));

  std::filesystem::remove(img_path);
  std::filesystem::remove(lab_path);
}

TEST_CASE("synthetic corpus has the requested histogram and is reproducible") {
  SyntheticImageConfig cfg;
  cfg.class_counts = {30, 20, 10, 25, 15, 5, 40, 35, 12, 8};
  cfg.seed = 42;
  auto [px1, lb1] = render_synthetic_images(cfg);
  auto [px2, lb2] = render_synthetic_images(cfg);
  REQUIRE(px1 == px2);
  REQUIRE(lb1 == lb2);

  std::vector<long> hist(10, 0);
  for (auto l : lb1) ++hist[l];
  for (int c = 0; c < 10; ++c) REQUIRE(hist[c] == cfg.class_counts[c]);

  cfg.part = 1;
  auto [px3, lb3] = render_synthetic_images(cfg);
  REQUIRE(px3 != px1);

  REQUIRE(canonical_train_counts().size() == 10);
  long total = 0;
  for (long c : canonical_train_counts()) total += c;
  REQUIRE(total == 60000);
  total = 0;
  for (long c : canonical_test_counts()) total += c;
  REQUIRE(total == 10000);
}

TEST_CASE("split matrix columns sum to one with the right owner boost") {
  auto m = build_split_matrix(0.5, 4, 10);
  for (int j = 0; j < 10; ++j) {
    double col = 0.0;
    for (int i = 0; i < 4; ++i) col += m.at(i, j);
    REQUIRE_THAT(col, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(m.at(j % 4, j), Catch::Matchers::WithinAbs(0.5 / 4 + 0.5, 1e-12));
  }

  auto even = build_split_matrix(0.0, 4, 10);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 10; ++j) REQUIRE_THAT(even.at(i, j), Catch::Matchers::WithinAbs(0.25, 1e-12));

  REQUIRE_THROWS_AS(build_split_matrix(1.5, 4, 10), std::invalid_argument);
}

namespace {

LabeledDataset tagged_dataset(const std::vector<int>& labels, int num_classes) {
  LabeledDataset d;
  d.feature_dim = 1;
  d.num_classes = num_classes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double tag = static_cast<double>(i);
    d.append_row(&tag, labels[i]);
  }
  return d;
}

}  // namespace

TEST_CASE("partition is a disjoint cover matching largest-remainder counts") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10 + c; ++i) labels.push_back(c);  // 10, 11, 12 samples
  LabeledDataset data = tagged_dataset(labels, 3);

  auto m = build_split_matrix(0.5, 2, 3);
  auto shards = partition_dataset(data, m, 5);
  REQUIRE(shards.size() == 2);

  // Every sample lands in exactly one shard.
  std::set<double> seen;
  std::size_t total = 0;
  for (const auto& s : shards) {
    total += s.size();
    for (std::size_t i = 0; i < s.size(); ++i) seen.insert(s.row(i)[0]);
  }
  REQUIRE(total == data.size());
  REQUIRE(seen.size() == data.size());

  // Independent recount of the expected per-shard class histogram.
  for (int j = 0; j < 3; ++j) {
    long n = 10 + j;
    std::vector<double> share = {m.at(0, j) * n, m.at(1, j) * n};
    std::vector<long> want = {static_cast<long>(share[0]), static_cast<long>(share[1])};
    long rem = n - want[0] - want[1];
    // two agents: the larger fractional part gets the leftover sample
    if (rem > 0) {
      double f0 = share[0] - want[0], f1 = share[1] - want[1];
      if (f0 >= f1)
        want[0] += rem;
      else
        want[1] += rem;
    }
    for (int i = 0; i < 2; ++i) {
      long got = 0;
      for (int l : shards[i].labels)
        if (l == j) ++got;
      REQUIRE(got == want[i]);
    }
  }
}

TEST_CASE("full heterogeneity gives every class to its owner") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 7; ++i) labels.push_back(c);
  LabeledDataset data = tagged_dataset(labels, 3);
  auto shards = partition_dataset(data, build_split_matrix(1.0, 3, 3), 1);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(shards[i].size() == 7);
    for (int l : shards[i].labels) REQUIRE(l == i);
  }
}

TEST_CASE("partition is seed deterministic and flags empty classes") {
  std::vector<int> labels(30, 0);
  for (int i = 10; i < 30; ++i) labels[i] = 1;
  LabeledDataset data = tagged_dataset(labels, 2);
  auto m = build_split_matrix(0.3, 2, 2);
  auto a = partition_dataset(data, m, 9);
  auto b = partition_dataset(data, m, 9);
  auto c = partition_dataset(data, m, 10);
  REQUIRE(a[0].features == b[0].features);
  REQUIRE(a[0].features != c[0].features);

  LabeledDataset gap = tagged_dataset({0, 0, 2, 2}, 3);  // class 1 missing
  REQUIRE_THROWS_MATCHES(partition_dataset(gap, build_split_matrix(0.0, 2, 3), 1), error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::StartsWith("EMPTY_CLASS")));
}
