#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dpdec/accountant.hpp"
#include "dpdec/dp.hpp"
#include "dpdec/error.hpp"
#include "dpdec/graph.hpp"
#include "dpdec/linalg.hpp"
#include "dpdec/objective.hpp"
#include "dpdec/partition.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

enum class Algorithm { dsgd, dsgt, dinno, dp_dsgd, dp_dsgt, dp_dinno };

inline bool is_private(Algorithm a) {
  return a == Algorithm::dp_dsgd || a == Algorithm::dp_dsgt || a == Algorithm::dp_dinno;
}

inline Algorithm base_algorithm(Algorithm a) {
  switch (a) {
    case Algorithm::dp_dsgd: return Algorithm::dsgd;
    case Algorithm::dp_dsgt: return Algorithm::dsgt;
    case Algorithm::dp_dinno: return Algorithm::dinno;
    default: return a;
  }
}

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::dsgd: return "dsgd";
    case Algorithm::dsgt: return "dsgt";
    case Algorithm::dinno: return "dinno";
    case Algorithm::dp_dsgd: return "dp-dsgd";
    case Algorithm::dp_dsgt: return "dp-dsgt";
    case Algorithm::dp_dinno: return "dp-dinno";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::dsgd, Algorithm::dsgt, Algorithm::dinno, Algorithm::dp_dsgd,
                      Algorithm::dp_dsgt, Algorithm::dp_dinno})
    if (s == algorithm_name(a)) return a;
  throw error(errc::config_invalid, "unknown algorithm '" + s + "'");
}

// Hyperbolic step decay; half_life = 0 keeps the step constant.
struct LrSchedule {
  double eta0 = 0.1;
  double half_life = 0.0;

  double at(long k) const {
    return half_life > 0.0 ? eta0 / (1.0 + static_cast<double>(k) / half_life) : eta0;
  }
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::dsgd;
  long rounds = 100;
  LrSchedule lr;

  double rho = 1.0;        // consensus penalty weight
  long primal_iters = 1;   // inner optimizer steps per round

  double clip_norm = std::numeric_limits<double>::infinity();
  double noise_multiplier = 0.0;
  long lot_size = 0;            // nominal lot per agent; 0 means the full shard
  double batch_fraction = 1.0;  // lot probability for the non-private engines
  double delta = 1e-5;
  double eps_cap = std::numeric_limits<double>::infinity();

  long eval_every = 0;    // accuracy cadence in rounds; 0 = final round only
  long record_every = 0;  // trace cadence; 0 = auto (aim for ~2000 rows)
  std::uint64_t noise_salt = 0;
};

struct AdamState {
  Vec m, v;
  long t = 0;
};

struct AgentState {
  Vec theta;
  Vec tracker;    // gradient tracking estimate
  Vec last_grad;  // gradient used in the previous tracker update
  Vec dual;       // running consensus dual
  AdamState adam;
};

struct TraceRow {
  long round = 0;
  double loss = 0.0;
  double consensus = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<TraceRow> rows;
  std::vector<Vec> thetas;
  long rounds_run = 0;
  bool truncated = false;  // stopped early because the next round would pass eps_cap
  double final_epsilon = std::numeric_limits<double>::quiet_NaN();
};

inline Vec mean_theta(const std::vector<AgentState>& states) {
  Vec m(states[0].theta.size(), 0.0);
  for (const auto& s : states) axpy(1.0, s.theta, m);
  scale(m, 1.0 / static_cast<double>(states.size()));
  return m;
}

// Largest distance of any agent from the average iterate.
inline double consensus_distance(const std::vector<AgentState>& states) {
  Vec m = mean_theta(states);
  double worst = 0.0;
  for (const auto& s : states) worst = std::max(worst, norm2(sub(s.theta, m)));
  return worst;
}

namespace detail {

struct EngineContext {
  const Objective& obj;
  const std::vector<LabeledDataset>& shards;
  const TrainConfig& cfg;
  std::uint64_t seed;
};

inline long nominal_lot(const EngineContext& ctx, int agent) {
  long n = static_cast<long>(ctx.shards[agent].size());
  return ctx.cfg.lot_size > 0 ? std::min(ctx.cfg.lot_size, n) : n;
}

// One gradient estimate, shared by every engine. Private runs draw a Poisson
// lot at rate L/n, clip per sample, divide by the nominal L and add noise;
// plain runs average the lot as drawn. Lot and noise randomness live in
// separate substreams so turning noise off cannot shift the lots.
inline Vec gradient_query(const EngineContext& ctx, int agent, long round, long sub,
                          const Vec& theta) {
  const auto& data = ctx.shards[agent];
  const bool priv = is_private(ctx.cfg.algorithm);

  double q;
  GradientQuery query;
  if (priv) {
    long lot = nominal_lot(ctx, agent);
    q = data.size() == 0 ? 0.0 : std::min(1.0, static_cast<double>(lot) / data.size());
    query.clip_norm = ctx.cfg.clip_norm;
    query.noise_multiplier = ctx.cfg.noise_multiplier;
    query.divisor = static_cast<double>(std::max<long>(lot, 1));
  } else {
    q = ctx.cfg.batch_fraction;
  }

  auto lot_rng = RngStream::keyed(ctx.seed, "lot", static_cast<std::uint64_t>(agent),
                                  static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(sub));
  auto lot = sample_lot(data.size(), q, lot_rng);
  if (!priv) query.divisor = static_cast<double>(std::max<std::size_t>(lot.size(), 1));

  auto noise_rng = RngStream::keyed(ctx.seed, "noise", static_cast<std::uint64_t>(agent),
                                    static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(sub), ctx.cfg.noise_salt);
  return reduce_gradients(
      static_cast<std::size_t>(ctx.obj.dim()), lot,
      [&](std::size_t s, Vec& out) { ctx.obj.sample_gradient(theta, data, s, out); }, query,
      noise_rng);
}

inline void adam_step(AdamState& st, Vec& psi, const Vec& g, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (st.m.empty()) {
    st.m.assign(psi.size(), 0.0);
    st.v.assign(psi.size(), 0.0);
  }
  st.t += 1;
  double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
    psi[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
  }
}

inline void dsgd_round(std::vector<AgentState>& states, const Matrix& w,
                       const EngineContext& ctx, long k) {
  const int n = static_cast<int>(states.size());
  const std::size_t d = states[0].theta.size();
  double eta = ctx.cfg.lr.at(k);
  std::vector<Vec> snapshot(n);
  for (int i = 0; i < n; ++i) snapshot[i] = states[i].theta;
  for (int i = 0; i < n; ++i) {
    Vec g = gradient_query(ctx, i, k, 0, snapshot[i]);
    Vec next(d, 0.0);
    for (int j = 0; j < n; ++j) {
      double wij = w.at(i, j);
      if (wij != 0.0) axpy(wij, snapshot[j], next);
    }
    axpy(-eta, g, next);
    states[i].theta = std::move(next);
  }
}

inline void dsgt_round(std::vector<AgentState>& states, const Matrix& w,
                       const EngineContext& ctx, long k) {
  const int n = static_cast<int>(states.size());
  const std::size_t d = states[0].theta.size();
  double eta = ctx.cfg.lr.at(k);
  std::vector<Vec> theta_old(n), tracker_old(n);
  for (int i = 0; i < n; ++i) {
    theta_old[i] = states[i].theta;
    tracker_old[i] = states[i].tracker;
  }
  for (int i = 0; i < n; ++i) {
    Vec next(d, 0.0);
    for (int j = 0; j < n; ++j) {
      double wij = w.at(i, j);
      if (wij == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) next[c] += wij * (theta_old[j][c] - eta * tracker_old[j][c]);
    }
    states[i].theta = std::move(next);
  }
  for (int i = 0; i < n; ++i) {
    Vec g = gradient_query(ctx, i, k, 0, states[i].theta);
    Vec next = g;
    for (int j = 0; j < n; ++j) {
      double wij = w.at(i, j);
      if (wij != 0.0) axpy(wij, tracker_old[j], next);
    }
    axpy(-1.0, states[i].last_grad, next);
    states[i].tracker = std::move(next);
    states[i].last_grad = std::move(g);
  }
}

inline void dinno_round(std::vector<AgentState>& states, const CommGraph& g,
                        const EngineContext& ctx, long k) {
  const int n = static_cast<int>(states.size());
  const std::size_t d = states[0].theta.size();
  double eta = ctx.cfg.lr.at(k);
  double rho = ctx.cfg.rho;
  std::vector<Vec> theta_old(n);
  for (int i = 0; i < n; ++i) theta_old[i] = states[i].theta;

  for (int i = 0; i < n; ++i) {
    for (int j : g.neighbors(i))
      for (std::size_t c = 0; c < d; ++c)
        states[i].dual[c] += rho * (theta_old[i][c] - theta_old[j][c]);
  }

  for (int i = 0; i < n; ++i) {
    Vec psi = theta_old[i];
    Vec grad(d);
    for (long t = 0; t < ctx.cfg.primal_iters; ++t) {
      grad = gradient_query(ctx, i, k, t, psi);
      axpy(1.0, states[i].dual, grad);
      // Consensus penalty pulls toward the midpoints with the round-start
      // neighborhood, the agent's own old iterate included.
      for (std::size_t c = 0; c < d; ++c)
        grad[c] += 2.0 * rho * (psi[c] - theta_old[i][c]);
      for (int j : g.neighbors(i))
        for (std::size_t c = 0; c < d; ++c)
          grad[c] += 2.0 * rho * (psi[c] - 0.5 * (theta_old[i][c] + theta_old[j][c]));
      adam_step(states[i].adam, psi, grad, eta);
    }
    states[i].theta = std::move(psi);
  }
}

}  // namespace detail

// Per-agent privacy odometer for a training run; counts gradient queries and
// converts through the per-agent sampling rate. Non-private runs report NaN.
class RunAccountant {
 public:
  RunAccountant(const TrainConfig& cfg, const std::vector<LabeledDataset>& shards) : cfg_(cfg) {
    if (!is_private(cfg.algorithm)) return;
    steps_per_round_ =
        base_algorithm(cfg.algorithm) == Algorithm::dinno ? std::max<long>(cfg.primal_iters, 1) : 1;
    for (const auto& shard : shards) {
      long n = static_cast<long>(shard.size());
      long lot = cfg.lot_size > 0 ? std::min(cfg.lot_size, n) : n;
      double q = n == 0 ? 0.0 : std::min(1.0, static_cast<double>(lot) / n);
      curves_.push_back(sampled_gaussian_curve(q, cfg.noise_multiplier));
    }
  }

  bool active() const { return !curves_.empty(); }

  // Worst-case epsilon over agents after `rounds` full rounds.
  double epsilon_after(long rounds) const {
    if (!active()) return std::numeric_limits<double>::quiet_NaN();
    if (rounds == 0) return 0.0;
    double worst = 0.0;
    for (const auto& c : curves_) {
      double e =
          to_eps_delta(compose(c, static_cast<double>(rounds) * steps_per_round_), cfg_.delta)
              .epsilon;
      worst = std::max(worst, e);
    }
    return worst;
  }

  double epsilon_for_agent(int i, long rounds) const {
    if (!active()) return std::numeric_limits<double>::quiet_NaN();
    if (rounds == 0) return 0.0;
    return to_eps_delta(compose(curves_[i], static_cast<double>(rounds) * steps_per_round_),
                        cfg_.delta)
        .epsilon;
  }

 private:
  const TrainConfig& cfg_;
  std::vector<RdpCurve> curves_;
  long steps_per_round_ = 1;
};

using RoundHook = std::function<void(long round, const std::vector<AgentState>&)>;

// Runs synchronous rounds of the configured algorithm. All agents share the
// same initial parameters, drawn from the "init" substream of `seed`.
inline TrainResult run_training(const TrainConfig& cfg, const CommGraph& graph, const Matrix& w,
                                const Objective& obj, const std::vector<LabeledDataset>& shards,
                                const LabeledDataset* eval_data, std::uint64_t seed,
                                const RoundHook& hook = nullptr) {
  const int n = graph.size();
  if (static_cast<int>(shards.size()) != n)
    throw error(errc::dimension_mismatch, "one shard per agent");
  if (w.rows != n || w.cols != n) throw error(errc::dimension_mismatch, "mixing matrix size");

  detail::EngineContext ctx{obj, shards, cfg, seed};
  auto init_rng = RngStream::keyed(seed, "init");
  Vec theta0 = obj.initial_params(init_rng);

  std::vector<AgentState> states(n);
  for (auto& s : states) {
    s.theta = theta0;
    s.tracker.assign(theta0.size(), 0.0);
    s.last_grad.assign(theta0.size(), 0.0);
    s.dual.assign(theta0.size(), 0.0);
  }

  RunAccountant acct(cfg, shards);
  Algorithm base = base_algorithm(cfg.algorithm);

  long stride = cfg.record_every > 0 ? cfg.record_every
                                     : std::max<long>(1, (cfg.rounds + 1999) / 2000);

  TrainResult result;
  auto record = [&](long round_number) {
    TraceRow row;
    row.round = round_number;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) loss += obj.mean_loss(states[i].theta, shards[i]);
    row.loss = loss / n;
    row.consensus = consensus_distance(states);
    bool eval_now = obj.is_classifier() && eval_data != nullptr &&
                    (round_number == cfg.rounds ||
                     (cfg.eval_every > 0 && round_number % cfg.eval_every == 0));
    if (eval_now) row.accuracy = obj.accuracy(mean_theta(states), *eval_data);
    if (acct.active()) row.epsilon = acct.epsilon_after(round_number);
    result.rows.push_back(row);
  };

  record(0);
  for (long k = 0; k < cfg.rounds; ++k) {
    if (acct.active() && std::isfinite(cfg.eps_cap) &&
        acct.epsilon_after(k + 1) > cfg.eps_cap) {
      result.truncated = true;
      break;
    }
    switch (base) {
      case Algorithm::dsgd: detail::dsgd_round(states, w, ctx, k); break;
      case Algorithm::dsgt: detail::dsgt_round(states, w, ctx, k); break;
      case Algorithm::dinno: detail::dinno_round(states, graph, ctx, k); break;
      default: break;
    }
    result.rounds_run = k + 1;
    if (hook) hook(k + 1, states);
    if ((k + 1) % stride == 0 || k + 1 == cfg.rounds) record(k + 1);
  }
  if (result.truncated && (result.rows.empty() || result.rows.back().round != result.rounds_run))
    record(result.rounds_run);

  result.thetas.reserve(n);
  for (const auto& s : states) result.thetas.push_back(s.theta);
  result.final_epsilon = acct.epsilon_after(result.rounds_run);
  return result;
}

}  // namespace dpdec
