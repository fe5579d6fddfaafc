#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpdec/accountant.hpp"
#include "dpdec/dataset.hpp"
#include "dpdec/engines.hpp"
#include "dpdec/error.hpp"
#include "dpdec/graph.hpp"
#include "dpdec/objective.hpp"
#include "dpdec/partition.hpp"
#include "dpdec/stats.hpp"

namespace dpdec {

struct GraphSpec {
  std::string kind = "complete";  // complete, ring, path, star, generate, edge_list
  double target_fiedler = 0.5;
  double tol = 0.02;
  std::string path;
};

struct ModelSpec {
  std::string kind = "mlp";  // mlp, logistic, quadratic
  int hidden = 64;
  double l2 = 0.0;
};

struct DataSpec {
  std::string kind = "synthetic_images";  // idx, synthetic_images, quadratic
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  // synthetic_images; 0 per-class counts mean the canonical 60k/10k histograms
  long train_per_class = 0;
  long test_per_class = 0;
  double noise_std = 0.22;
  std::uint64_t image_seed = 1;
  // quadratic
  int dim = 10;
  long samples_per_agent = 20;
  double center_spread = 1.0;
  double jitter = 0.2;
  std::string matrix = "identity";  // identity, spd
  double lambda_min = 1.0;
  double lambda_max = 4.0;
};

struct PrivacySpec {
  bool enabled = false;
  double target_epsilon = 0.0;  // calibrated when > 0
  double sigma = 0.0;           // used directly when > 0
  double delta = 1e-5;
  double clip_norm = 10.0;
  long lot_size = 0;
};

struct ExperimentConfig {
  std::string name = "run";
  Algorithm algorithm = Algorithm::dsgd;
  int agents = 2;
  GraphSpec graph;
  std::string mixing = "metropolis";  // metropolis, uniform
  ModelSpec model;
  DataSpec data;
  double split_t = 0.0;
  PrivacySpec privacy;
  long rounds = 100;
  double eta0 = 0.1;
  double half_life = 0.0;
  double rho = 1.0;
  long primal_iters = 1;
  double batch_fraction = 1.0;
  long eval_every = 0;
  long record_every = 0;
  double eps_cap = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::string out_dir;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    c.agents = j.at("agents").get<int>();
    if (j.contains("graph")) {
      const auto& g = j.at("graph");
      c.graph.kind = g.value("kind", c.graph.kind);
      c.graph.target_fiedler = g.value("target_fiedler", c.graph.target_fiedler);
      c.graph.tol = g.value("tol", c.graph.tol);
      c.graph.path = g.value("path", c.graph.path);
    }
    c.mixing = j.value("mixing", c.mixing);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.kind = m.value("kind", c.model.kind);
      c.model.hidden = m.value("hidden", c.model.hidden);
      c.model.l2 = m.value("l2", c.model.l2);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.data.kind = d.value("kind", c.data.kind);
      c.data.train_images = d.value("train_images", c.data.train_images);
      c.data.train_labels = d.value("train_labels", c.data.train_labels);
      c.data.test_images = d.value("test_images", c.data.test_images);
      c.data.test_labels = d.value("test_labels", c.data.test_labels);
      c.data.train_per_class = d.value("train_per_class", c.data.train_per_class);
      c.data.test_per_class = d.value("test_per_class", c.data.test_per_class);
      c.data.noise_std = d.value("noise_std", c.data.noise_std);
      c.data.image_seed = d.value("image_seed", c.data.image_seed);
      c.data.dim = d.value("dim", c.data.dim);
      c.data.samples_per_agent = d.value("samples_per_agent", c.data.samples_per_agent);
      c.data.center_spread = d.value("center_spread", c.data.center_spread);
      c.data.jitter = d.value("jitter", c.data.jitter);
      c.data.matrix = d.value("matrix", c.data.matrix);
      c.data.lambda_min = d.value("lambda_min", c.data.lambda_min);
      c.data.lambda_max = d.value("lambda_max", c.data.lambda_max);
    }
    c.split_t = j.value("split_t", c.split_t);
    if (j.contains("privacy")) {
      const auto& p = j.at("privacy");
      c.privacy.enabled = true;
      c.privacy.target_epsilon = p.value("target_epsilon", 0.0);
      c.privacy.sigma = p.value("sigma", 0.0);
      c.privacy.delta = p.value("delta", c.privacy.delta);
      c.privacy.clip_norm = p.value("clip_norm", c.privacy.clip_norm);
      c.privacy.lot_size = p.value("lot_size", c.privacy.lot_size);
      if (c.privacy.target_epsilon > 0.0 && c.privacy.sigma > 0.0)
        throw error(errc::config_invalid, "give target_epsilon or sigma, not both");
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.rounds = t.value("rounds", c.rounds);
      c.eta0 = t.value("eta0", c.eta0);
      c.half_life = t.value("half_life", c.half_life);
      c.rho = t.value("rho", c.rho);
      c.primal_iters = t.value("primal_iters", c.primal_iters);
      c.batch_fraction = t.value("batch_fraction", c.batch_fraction);
      c.eval_every = t.value("eval_every", c.eval_every);
      c.record_every = t.value("record_every", c.record_every);
    }
    c.eps_cap = j.value("eps_cap", c.eps_cap);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::config_invalid, e.what());
  }
  if (is_private(c.algorithm) && !c.privacy.enabled)
    throw error(errc::config_invalid, "private algorithm needs a privacy block");
  return c;
}

// Loads a config file. The DP_CONSENSUS_SEED environment variable, when set,
// overrides the seed from the file.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::config_invalid, std::string("bad json in ") + path + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  if (const char* env = std::getenv("DP_CONSENSUS_SEED")) {
    try {
      c.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw error(errc::config_invalid, "DP_CONSENSUS_SEED is not an integer");
    }
  }
  return c;
}

inline CommGraph make_graph(const ExperimentConfig& c) {
  const auto& g = c.graph;
  if (g.kind == "complete") return CommGraph::complete(c.agents);
  if (g.kind == "ring") return CommGraph::ring(c.agents);
  if (g.kind == "path") return CommGraph::path(c.agents);
  if (g.kind == "star") return CommGraph::star(c.agents);
  if (g.kind == "generate") return generate_graph(c.agents, g.target_fiedler, g.tol, c.seed);
  if (g.kind == "edge_list") {
    CommGraph loaded = load_edge_list(g.path);
    if (loaded.size() != c.agents)
      throw error(errc::config_invalid, "edge list agent count mismatch");
    return loaded;
  }
  throw error(errc::config_invalid, "unknown graph kind '" + g.kind + "'");
}

inline MixingScheme parse_mixing(const std::string& s) {
  if (s == "metropolis") return MixingScheme::metropolis;
  if (s == "uniform") return MixingScheme::uniform_degree;
  throw error(errc::config_invalid, "unknown mixing scheme '" + s + "'");
}

struct ExperimentData {
  std::vector<LabeledDataset> shards;
  std::unique_ptr<LabeledDataset> eval;  // null for objectives without one
  std::unique_ptr<Objective> objective;
  Vec quadratic_optimum;  // empty unless the objective is quadratic
};

namespace detail {

inline LabeledDataset synthetic_part(const DataSpec& d, int part, const std::vector<long>& counts) {
  SyntheticImageConfig cfg;
  cfg.class_counts = counts;
  cfg.noise_std = d.noise_std;
  cfg.part = part;
  cfg.seed = d.image_seed;
  return make_synthetic_dataset(cfg);
}

}  // namespace detail

inline ExperimentData prepare_data(const ExperimentConfig& c) {
  ExperimentData out;
  if (c.data.kind == "quadratic") {
    auto mode = c.data.matrix == "spd" ? QuadraticObjective::AMode::dense
                                       : QuadraticObjective::AMode::identity;
    auto obj = std::make_unique<QuadraticObjective>(c.data.dim, mode);
    for (int a = 0; a < c.agents; ++a) {
      auto center_rng = RngStream::keyed(c.seed, "centers", static_cast<std::uint64_t>(a));
      Vec center(c.data.dim);
      for (auto& v : center) v = (2.0 * center_rng.uniform01() - 1.0) * c.data.center_spread;
      std::vector<Vec> targets(c.data.samples_per_agent, Vec(c.data.dim));
      auto target_rng = RngStream::keyed(c.seed, "targets", static_cast<std::uint64_t>(a));
      for (auto& tv : targets)
        for (int i = 0; i < c.data.dim; ++i) tv[i] = center[i] + c.data.jitter * target_rng.normal();
      if (mode == QuadraticObjective::AMode::identity) {
        out.shards.push_back(obj->identity_data(targets));
      } else {
        auto spd_rng = RngStream::keyed(c.seed, "spd", static_cast<std::uint64_t>(a));
        out.shards.push_back(obj->random_spd_data(targets.size(), c.data.lambda_min,
                                                  c.data.lambda_max, targets, spd_rng));
      }
    }
    std::vector<const LabeledDataset*> parts;
    for (const auto& s : out.shards) parts.push_back(&s);
    out.quadratic_optimum = obj->optimum(parts);
    out.objective = std::move(obj);
    return out;
  }

  LabeledDataset train, test;
  if (c.data.kind == "idx") {
    train = load_idx_dataset(c.data.train_images, c.data.train_labels);
    test = load_idx_dataset(c.data.test_images, c.data.test_labels);
  } else if (c.data.kind == "synthetic_images") {
    std::vector<long> train_counts = c.data.train_per_class > 0
                                         ? std::vector<long>(10, c.data.train_per_class)
                                         : canonical_train_counts();
    std::vector<long> test_counts = c.data.test_per_class > 0
                                        ? std::vector<long>(10, c.data.test_per_class)
                                        : canonical_test_counts();
    train = detail::synthetic_part(c.data, 0, train_counts);
    test = detail::synthetic_part(c.data, 1, test_counts);
  } else {
    throw error(errc::config_invalid, "unknown data kind '" + c.data.kind + "'");
  }

  if (c.model.kind == "mlp") {
    out.objective = std::make_unique<MlpObjective>(train.feature_dim, c.model.hidden, train.num_classes);
  } else if (c.model.kind == "logistic") {
    out.objective = std::make_unique<LogisticObjective>(train.feature_dim, train.num_classes, c.model.l2);
  } else {
    throw error(errc::config_invalid, "model '" + c.model.kind + "' needs quadratic data");
  }

  auto split = build_split_matrix(c.split_t, c.agents, train.num_classes);
  out.shards = partition_dataset(train, split, c.seed);
  out.eval = std::make_unique<LabeledDataset>(std::move(test));
  return out;
}

inline TrainConfig make_train_config(const ExperimentConfig& c, double sigma) {
  TrainConfig t;
  t.algorithm = c.algorithm;
  t.rounds = c.rounds;
  t.lr.eta0 = c.eta0;
  t.lr.half_life = c.half_life;
  t.rho = c.rho;
  t.primal_iters = c.primal_iters;
  t.batch_fraction = c.batch_fraction;
  t.eval_every = c.eval_every;
  t.record_every = c.record_every;
  t.eps_cap = c.eps_cap;
  if (is_private(c.algorithm)) {
    t.clip_norm = c.privacy.clip_norm;
    t.noise_multiplier = sigma;
    t.lot_size = c.privacy.lot_size;
    t.delta = c.privacy.delta;
  }
  return t;
}

// Resolves the noise multiplier for a run: explicit sigma wins, otherwise the
// target epsilon is calibrated against the worst-case per-agent sampling rate.
inline double resolve_sigma(const ExperimentConfig& c, const std::vector<LabeledDataset>& shards) {
  if (!is_private(c.algorithm)) return 0.0;
  if (c.privacy.sigma > 0.0) return c.privacy.sigma;
  if (!(c.privacy.target_epsilon > 0.0))
    throw error(errc::config_invalid, "privacy block needs target_epsilon or sigma");
  double q_worst = 0.0;
  for (const auto& s : shards) {
    long n = static_cast<long>(s.size());
    if (n == 0) continue;
    long lot = c.privacy.lot_size > 0 ? std::min(c.privacy.lot_size, n) : n;
    q_worst = std::max(q_worst, std::min(1.0, static_cast<double>(lot) / n));
  }
  long steps = c.rounds * (base_algorithm(c.algorithm) == Algorithm::dinno
                               ? std::max<long>(c.primal_iters, 1)
                               : 1);
  return calibrate_sigma(q_worst, steps, c.privacy.target_epsilon, c.privacy.delta);
}

struct ExperimentResult {
  TrainResult train;
  double sigma = 0.0;
  double final_accuracy = std::numeric_limits<double>::quiet_NaN();
  double final_loss = 0.0;
  double final_consensus = 0.0;
  FiedlerValue fiedler;
  std::uint64_t graph_hash = 0;
  std::vector<long> shard_sizes;
  std::vector<double> per_agent_epsilon;
  double wall_seconds = 0.0;
};

inline ExperimentResult run_experiment(const ExperimentConfig& c, const RoundHook& hook = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  CommGraph graph = make_graph(c);
  Matrix w = build_mixing_matrix(graph, parse_mixing(c.mixing));
  ExperimentData data = prepare_data(c);

  ExperimentResult r;
  r.fiedler = fiedler_value(graph);
  r.graph_hash = graph.hash();
  for (const auto& s : data.shards) r.shard_sizes.push_back(static_cast<long>(s.size()));
  r.sigma = resolve_sigma(c, data.shards);

  TrainConfig tc = make_train_config(c, r.sigma);
  r.train = run_training(tc, graph, w, *data.objective, data.shards, data.eval.get(), c.seed, hook);

  RunAccountant acct(tc, data.shards);
  for (int i = 0; i < c.agents; ++i)
    r.per_agent_epsilon.push_back(acct.epsilon_for_agent(i, r.train.rounds_run));

  if (!r.train.rows.empty()) {
    const auto& last = r.train.rows.back();
    r.final_loss = last.loss;
    r.final_consensus = last.consensus;
    r.final_accuracy = last.accuracy;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace detail {

inline void csv_cell(std::ostream& os, double v) {
  if (std::isnan(v)) return;  // empty cell
  os << std::setprecision(12) << v;
}

inline std::uint64_t checksum(const Vec& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : v) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof x);
    std::memcpy(&bits, &x, sizeof bits);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace detail

inline void write_metrics_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "round,loss,consensus,accuracy,epsilon\n";
  for (const auto& r : rows) {
    out << r.round << ",";
    detail::csv_cell(out, r.loss);
    out << ",";
    detail::csv_cell(out, r.consensus);
    out << ",";
    detail::csv_cell(out, r.accuracy);
    out << ",";
    detail::csv_cell(out, r.epsilon);
    out << "\n";
  }
}

inline nlohmann::json manifest_json(const ExperimentConfig& c, const ExperimentResult& r) {
  nlohmann::json j;
  j["name"] = c.name;
  j["algorithm"] = algorithm_name(c.algorithm);
  j["agents"] = c.agents;
  j["seed"] = c.seed;
  j["split_t"] = c.split_t;
  j["mixing"] = c.mixing;
  j["graph"] = {{"kind", c.graph.kind},
                {"hash", r.graph_hash},
                {"fiedler", r.fiedler.absolute},
                {"normalized_fiedler", r.fiedler.normalized}};
  j["shard_sizes"] = r.shard_sizes;
  j["rounds_requested"] = c.rounds;
  j["rounds_run"] = r.train.rounds_run;
  j["truncated_by_eps_cap"] = r.train.truncated;
  j["wall_seconds"] = r.wall_seconds;
  j["final"] = {{"loss", r.final_loss}, {"consensus", r.final_consensus}};
  if (!std::isnan(r.final_accuracy)) j["final"]["accuracy"] = r.final_accuracy;
  if (is_private(c.algorithm)) {
    j["privacy"] = {{"sigma", r.sigma},
                    {"delta", c.privacy.delta},
                    {"clip_norm", c.privacy.clip_norm},
                    {"lot_size", c.privacy.lot_size},
                    {"epsilon", r.train.final_epsilon},
                    {"per_agent_epsilon", r.per_agent_epsilon}};
    if (c.privacy.target_epsilon > 0.0) j["privacy"]["target_epsilon"] = c.privacy.target_epsilon;
  }
  return j;
}

// Runs a config end to end and writes metrics.csv and manifest.json to out_dir.
inline ExperimentResult execute_and_write(const ExperimentConfig& c) {
  ExperimentResult r = run_experiment(c);
  if (!c.out_dir.empty()) {
    std::filesystem::create_directories(c.out_dir);
    write_metrics_csv((std::filesystem::path(c.out_dir) / "metrics.csv").string(), r.train.rows);
    nlohmann::json m = manifest_json(c, r);
    auto init_rng = RngStream::keyed(c.seed, "init");
    ExperimentData data = prepare_data(c);
    m["theta_init_checksum"] = detail::checksum(data.objective->initial_params(init_rng));
    std::ofstream out((std::filesystem::path(c.out_dir) / "manifest.json").string());
    out << m.dump(2) << "\n";
  }
  return r;
}

struct SweepPoint {
  double target = 0.0;    // requested fiedler value or split t
  double measured = 0.0;  // achieved fiedler value (mean over trials) or t again
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double acc_mean = 0.0;
  double acc_stdev = 0.0;
  double acc_min = 0.0;
  double acc_max = 0.0;
  int trials = 0;
};

// Accuracy vs graph connectivity at fixed privacy budget. Each trial draws its
// own generated graph and seed.
inline std::vector<SweepPoint> connectivity_sweep(const ExperimentConfig& base,
                                                  const std::vector<double>& targets, int trials) {
  std::vector<SweepPoint> points;
  for (double target : targets) {
    SweepPoint p;
    p.target = target;
    std::vector<double> accs;
    double fsum = 0.0, esum = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      ExperimentConfig c = base;
      c.seed = base.seed + static_cast<std::uint64_t>(trial) * 7919;
      c.graph.kind = "generate";
      c.graph.target_fiedler = target;
      ExperimentResult r = run_experiment(c);
      accs.push_back(r.final_accuracy);
      fsum += r.fiedler.normalized;
      esum += is_private(c.algorithm) ? r.train.final_epsilon : 0.0;
    }
    p.measured = fsum / trials;
    p.epsilon = is_private(base.algorithm) ? esum / trials : std::numeric_limits<double>::quiet_NaN();
    p.acc_mean = mean(accs);
    p.acc_stdev = stdev(accs);
    p.acc_min = *std::min_element(accs.begin(), accs.end());
    p.acc_max = *std::max_element(accs.begin(), accs.end());
    p.trials = trials;
    points.push_back(p);
  }
  return points;
}

// Accuracy vs data heterogeneity at fixed privacy budget.
inline std::vector<SweepPoint> split_sweep(const ExperimentConfig& base,
                                           const std::vector<double>& ts, int trials) {
  std::vector<SweepPoint> points;
  for (double t : ts) {
    SweepPoint p;
    p.target = t;
    p.measured = t;
    std::vector<double> accs;
    double esum = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      ExperimentConfig c = base;
      c.seed = base.seed + static_cast<std::uint64_t>(trial) * 7919;
      c.split_t = t;
      ExperimentResult r = run_experiment(c);
      accs.push_back(r.final_accuracy);
      esum += is_private(c.algorithm) ? r.train.final_epsilon : 0.0;
    }
    p.epsilon = is_private(base.algorithm) ? esum / trials : std::numeric_limits<double>::quiet_NaN();
    p.acc_mean = mean(accs);
    p.acc_stdev = stdev(accs);
    p.acc_min = *std::min_element(accs.begin(), accs.end());
    p.acc_max = *std::max_element(accs.begin(), accs.end());
    p.trials = trials;
    points.push_back(p);
  }
  return points;
}

inline void write_sweep_csv(const std::string& path, const std::string& algorithm,
                            const std::string& axis, const std::vector<SweepPoint>& points) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (out.tellp() == 0)
    out << "algorithm," << axis << ",measured,epsilon,acc_mean,acc_stdev,acc_min,acc_max,trials\n";
  for (const auto& p : points) {
    out << algorithm << "," << std::setprecision(12) << p.target << "," << p.measured << ",";
    detail::csv_cell(out, p.epsilon);
    out << "," << p.acc_mean << "," << p.acc_stdev << "," << p.acc_min << "," << p.acc_max << ","
        << p.trials << "\n";
  }
}

// Steady-state optimality gap of the mean iterate as a function of the noise
// multiplier, with a log-log line fit. Works on quadratic data where the
// pooled optimum is exact.
struct NoiseScalingResult {
  std::vector<double> sigmas;
  std::vector<double> gaps;  // mean over repeats of the steady-state gap
  LineFit fit;               // on log(sigma) vs log(gap)
};

inline NoiseScalingResult noise_scaling_study(const ExperimentConfig& base,
                                              const std::vector<double>& sigmas, int repeats,
                                              double tail_fraction = 0.1) {
  if (!is_private(base.algorithm))
    throw error(errc::config_invalid, "noise scaling study needs a private algorithm");
  NoiseScalingResult out;
  out.sigmas = sigmas;
  for (double sigma : sigmas) {
    double acc = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      ExperimentConfig c = base;
      c.privacy.sigma = sigma;
      c.privacy.target_epsilon = 0.0;
      c.seed = base.seed + static_cast<std::uint64_t>(rep) * 104729;
      c.eps_cap = std::numeric_limits<double>::infinity();

      CommGraph graph = make_graph(c);
      Matrix w = build_mixing_matrix(graph, parse_mixing(c.mixing));
      ExperimentData data = prepare_data(c);
      if (data.quadratic_optimum.empty())
        throw error(errc::config_invalid, "noise scaling study needs quadratic data");
      TrainConfig tc = make_train_config(c, sigma);

      long tail_start = c.rounds - std::max<long>(1, static_cast<long>(tail_fraction * c.rounds));
      double gap_sum = 0.0;
      long gap_count = 0;
      const Vec& opt = data.quadratic_optimum;
      run_training(tc, graph, w, *data.objective, data.shards, nullptr, c.seed,
                   [&](long round, const std::vector<AgentState>& states) {
                     if (round > tail_start) {
                       gap_sum += norm2(sub(mean_theta(states), opt));
                       ++gap_count;
                     }
                   });
      acc += gap_sum / static_cast<double>(gap_count);
    }
    out.gaps.push_back(acc / repeats);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    lx.push_back(std::log(out.sigmas[i]));
    ly.push_back(std::log(out.gaps[i]));
  }
  out.fit = fit_line(lx, ly);
  return out;
}

}  // namespace dpdec
