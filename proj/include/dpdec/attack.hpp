#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpdec/accountant.hpp"
#include "dpdec/dataset.hpp"
#include "dpdec/engines.hpp"
#include "dpdec/error.hpp"
#include "dpdec/objective.hpp"
#include "dpdec/partition.hpp"
#include "dpdec/stats.hpp"

namespace dpdec {

// Empirical lower bound on the privacy parameter from a membership inference
// game: train many models with and without a canary record, threshold the
// canary loss, and convert high-confidence TPR/FPR bounds into an epsilon any
// (eps, delta)-DP mechanism must exceed for this attack to be possible.

struct ThresholdChoice {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double score = 0.0;  // (tpr - delta) / fpr on the fit split
};

// Picks the loss threshold maximizing (tpr - delta) / fpr over midpoints of
// the pooled fit losses. Members are the models whose canary loss falls below
// the threshold. A zero FPR with tpr > delta scores infinite.
inline ThresholdChoice choose_threshold(const std::vector<double>& member_losses,
                                        const std::vector<double>& nonmember_losses,
                                        double delta) {
  if (member_losses.empty() || nonmember_losses.empty())
    throw std::invalid_argument("need fit losses on both arms");
  std::vector<double> pool = member_losses;
  pool.insert(pool.end(), nonmember_losses.begin(), nonmember_losses.end());
  std::sort(pool.begin(), pool.end());
  std::vector<double> candidates;
  candidates.push_back(pool.front() - 1.0);
  for (std::size_t i = 0; i + 1 < pool.size(); ++i)
    candidates.push_back(0.5 * (pool[i] + pool[i + 1]));
  candidates.push_back(pool.back() + 1.0);

  auto rate_below = [](const std::vector<double>& xs, double thr) {
    long c = 0;
    for (double x : xs)
      if (x < thr) ++c;
    return static_cast<double>(c) / static_cast<double>(xs.size());
  };

  ThresholdChoice best;
  best.score = -std::numeric_limits<double>::infinity();
  for (double thr : candidates) {
    double tpr = rate_below(member_losses, thr);
    double fpr = rate_below(nonmember_losses, thr);
    double score;
    if (fpr > 0.0)
      score = (tpr - delta) / fpr;
    else
      score = tpr > delta ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    // ties (several zero-fpr candidates) go to the most powerful threshold
    if (score > best.score || (score == best.score && tpr > best.tpr))
      best = {thr, tpr, fpr, score};
  }
  return best;
}

// ln((tpr_lb - delta) / fpr_ub); -inf when the attack shows nothing.
inline double attack_epsilon_lower_bound(double tpr_lb, double fpr_ub, double delta) {
  double numer = tpr_lb - delta;
  if (numer <= 0.0) return -std::numeric_limits<double>::infinity();
  if (fpr_ub <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(numer / fpr_ub);
}

struct AuditConfig {
  Algorithm algorithm = Algorithm::dp_dsgd;
  int agents = 3;
  int classes = 3;
  long per_class = 100;
  int hidden = 16;
  long rounds = 100;
  double eta0 = 0.05;
  double half_life = 0.0;
  double rho = 1.0;
  long primal_iters = 1;

  double target_epsilon = 1.0;  // calibrated when the algorithm is private
  double delta = 1e-2;
  double clip_norm = 10.0;
  long lot_size = 30;

  long models_per_arm = 200;
  double fit_fraction = 0.2;
  double confidence = 0.95;

  double image_noise_std = 0.22;
  std::uint64_t image_seed = 7;
  std::uint64_t seed = 1;
};

struct AuditResult {
  std::vector<double> member_losses;     // canary-in arm, one per model
  std::vector<double> nonmember_losses;  // canary-out arm
  ThresholdChoice threshold;
  long eval_tp = 0, eval_fp = 0, eval_per_arm = 0;
  double tpr_lower = 0.0;
  double fpr_upper = 1.0;
  double epsilon_lower_bound = 0.0;
  double nominal_epsilon = std::numeric_limits<double>::quiet_NaN();
  double sigma = 0.0;
  bool violation = false;  // lower bound exceeds the nominal epsilon
};

// Runs the full audit. Both arms share every random stream (data, lots,
// initialization); model index enters only the noise substream, so arms differ
// exactly by the canary record plus fresh DP noise per model.
inline AuditResult run_membership_audit(const AuditConfig& cfg) {
  if (cfg.models_per_arm < 20) throw std::invalid_argument("need at least 20 models per arm");
  if (!(cfg.fit_fraction > 0.0 && cfg.fit_fraction < 1.0))
    throw std::invalid_argument("fit fraction outside (0, 1)");

  SyntheticImageConfig img;
  img.classes = cfg.classes;
  img.class_counts.assign(cfg.classes, cfg.per_class);
  img.noise_std = cfg.image_noise_std;
  img.part = 0;
  img.seed = cfg.image_seed;
  LabeledDataset base = make_synthetic_dataset(img);

  auto split = build_split_matrix(1.0, cfg.agents, cfg.classes);
  std::vector<LabeledDataset> clean_shards = partition_dataset(base, split, cfg.seed);

  // Canary: blank image labeled as class 0, owned by agent 0 in both the
  // split rule and the probe below.
  LabeledDataset canary;
  canary.feature_dim = base.feature_dim;
  canary.num_classes = base.num_classes;
  Vec blank(base.feature_dim, 0.0);
  canary.append_row(blank.data(), 0);

  std::vector<LabeledDataset> poisoned_shards = clean_shards;
  poisoned_shards[0].append_row(canary.row(0), 0);

  MlpObjective obj(base.feature_dim, cfg.hidden, cfg.classes);
  CommGraph graph = CommGraph::complete(cfg.agents);
  Matrix w = build_mixing_matrix(graph, MixingScheme::metropolis);

  TrainConfig tc;
  tc.algorithm = cfg.algorithm;
  tc.rounds = cfg.rounds;
  tc.lr.eta0 = cfg.eta0;
  tc.lr.half_life = cfg.half_life;
  tc.rho = cfg.rho;
  tc.primal_iters = cfg.primal_iters;
  tc.record_every = cfg.rounds;  // only the final trace row matters here
  AuditResult out;
  if (is_private(cfg.algorithm)) {
    double q = 0.0;
    for (const auto& s : poisoned_shards)
      q = std::max(q, std::min(1.0, static_cast<double>(cfg.lot_size) /
                                        static_cast<double>(s.size())));
    long steps = cfg.rounds * (base_algorithm(cfg.algorithm) == Algorithm::dinno
                                   ? std::max<long>(cfg.primal_iters, 1)
                                   : 1);
    out.sigma = calibrate_sigma(q, steps, cfg.target_epsilon, cfg.delta);
    tc.clip_norm = cfg.clip_norm;
    tc.noise_multiplier = out.sigma;
    tc.lot_size = cfg.lot_size;
    tc.delta = cfg.delta;
  }

  auto train_one = [&](const std::vector<LabeledDataset>& shards, long model) {
    TrainConfig m = tc;
    m.noise_salt = static_cast<std::uint64_t>(model) + 1;
    TrainResult r = run_training(m, graph, w, obj, shards, nullptr, cfg.seed);
    return obj.sample_loss(r.thetas[0], canary, 0);
  };

  out.member_losses.reserve(cfg.models_per_arm);
  out.nonmember_losses.reserve(cfg.models_per_arm);
  for (long m = 0; m < cfg.models_per_arm; ++m) {
    out.member_losses.push_back(train_one(poisoned_shards, m));
    out.nonmember_losses.push_back(train_one(clean_shards, m));
  }
  if (is_private(cfg.algorithm)) {
    RunAccountant acct(tc, poisoned_shards);
    out.nominal_epsilon = acct.epsilon_after(cfg.rounds);
  }

  long fit_n = std::max<long>(1, static_cast<long>(cfg.fit_fraction * cfg.models_per_arm));
  std::vector<double> fit_member(out.member_losses.begin(), out.member_losses.begin() + fit_n);
  std::vector<double> fit_nonmember(out.nonmember_losses.begin(),
                                    out.nonmember_losses.begin() + fit_n);
  out.threshold = choose_threshold(fit_member, fit_nonmember, cfg.delta);

  out.eval_per_arm = cfg.models_per_arm - fit_n;
  for (long m = fit_n; m < cfg.models_per_arm; ++m) {
    if (out.member_losses[m] < out.threshold.threshold) ++out.eval_tp;
    if (out.nonmember_losses[m] < out.threshold.threshold) ++out.eval_fp;
  }
  out.tpr_lower = clopper_pearson_lower(out.eval_tp, out.eval_per_arm, cfg.confidence);
  out.fpr_upper = clopper_pearson_upper(out.eval_fp, out.eval_per_arm, cfg.confidence);
  out.epsilon_lower_bound = attack_epsilon_lower_bound(out.tpr_lower, out.fpr_upper, cfg.delta);
  out.violation =
      is_private(cfg.algorithm) && out.epsilon_lower_bound > out.nominal_epsilon;
  return out;
}

inline AuditConfig audit_config_from_json(const nlohmann::json& j) {
  AuditConfig c;
  try {
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    c.agents = j.value("agents", c.agents);
    c.classes = j.value("classes", c.classes);
    c.per_class = j.value("per_class", c.per_class);
    c.hidden = j.value("hidden", c.hidden);
    c.rounds = j.value("rounds", c.rounds);
    c.eta0 = j.value("eta0", c.eta0);
    c.half_life = j.value("half_life", c.half_life);
    c.rho = j.value("rho", c.rho);
    c.primal_iters = j.value("primal_iters", c.primal_iters);
    c.target_epsilon = j.value("epsilon", c.target_epsilon);
    c.delta = j.value("delta", c.delta);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.lot_size = j.value("lot_size", c.lot_size);
    c.models_per_arm = j.value("models_per_arm", c.models_per_arm);
    c.fit_fraction = j.value("fit_fraction", c.fit_fraction);
    c.confidence = j.value("confidence", c.confidence);
    c.image_noise_std = j.value("image_noise_std", c.image_noise_std);
    c.image_seed = j.value("image_seed", c.image_seed);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::config_invalid, e.what());
  }
  return c;
}

inline AuditConfig load_audit_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::config_invalid, std::string("bad json in ") + path + ": " + e.what());
  }
  return audit_config_from_json(j);
}

inline void write_audit_losses_csv(const std::string& path, const AuditResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "model,member_loss,nonmember_loss\n";
  out.precision(12);
  for (std::size_t m = 0; m < r.member_losses.size(); ++m)
    out << m << "," << r.member_losses[m] << "," << r.nonmember_losses[m] << "\n";
}

}  // namespace dpdec
