#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpdec/dpdec.hpp"

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw dpdec::error(dpdec::errc::config_invalid, "empty list '" + csv + "'");
  return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_run_summary(const dpdec::ExperimentConfig& cfg, const dpdec::ExperimentResult& r) {
  std::cout << std::setprecision(10);
  std::cout << "algorithm=" << dpdec::algorithm_name(cfg.algorithm) << " agents=" << cfg.agents
            << " rounds=" << r.train.rounds_run << "/" << cfg.rounds << "\n";
  std::cout << "normalized_fiedler=" << r.fiedler.normalized << "\n";
  std::cout << "final_loss=" << r.final_loss << " final_consensus=" << r.final_consensus;
  if (!std::isnan(r.final_accuracy)) std::cout << " final_accuracy=" << r.final_accuracy;
  std::cout << "\n";
  if (dpdec::is_private(cfg.algorithm)) {
    std::cout << "sigma=" << r.sigma << " epsilon=" << r.train.final_epsilon
              << " delta=" << cfg.privacy.delta << "\n";
  }
  if (r.train.truncated) std::cout << "stopped early: epsilon cap reached\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized consensus training with per-agent differential privacy"};
  app.require_subcommand(1);
  int rc = 0;

  // train
  auto* train = app.add_subcommand("train", "run one training configuration");
  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  train->add_option("--config", train_config, "json config file")->required();
  train->add_option("--out", train_out, "output directory (overrides config out_dir)");
  train->add_option("--seed", train_seed, "seed override")->each([&](const std::string&) {
    train_seed_set = true;
  });
  train->callback([&] {
    dpdec::ExperimentConfig cfg = dpdec::load_config(train_config);
    if (train_seed_set) cfg.seed = train_seed;
    if (!train_out.empty()) cfg.out_dir = train_out;
    dpdec::ExperimentResult r = dpdec::execute_and_write(cfg);
    print_run_summary(cfg, r);
    if (!cfg.out_dir.empty())
      std::cout << "wrote " << cfg.out_dir << "/metrics.csv and manifest.json\n";
    if (r.train.truncated) rc = 3;
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "noise multiplier for a privacy target");
  double cal_q = 0.01, cal_eps = 1.0, cal_delta = 1e-5;
  long cal_steps = 1000;
  std::string cal_orders;
  cal->add_option("--q", cal_q, "per-step sampling rate")->required();
  cal->add_option("--steps", cal_steps, "number of composed steps")->required();
  cal->add_option("--target-eps", cal_eps, "target epsilon")->required();
  cal->add_option("--delta", cal_delta, "target delta");
  cal->add_option("--orders", cal_orders, "comma separated renyi orders");
  cal->callback([&] {
    std::vector<double> orders =
        cal_orders.empty() ? dpdec::default_rdp_orders() : parse_list(cal_orders);
    double sigma = dpdec::calibrate_sigma(cal_q, cal_steps, cal_eps, cal_delta, orders);
    auto spend = dpdec::to_eps_delta(
        dpdec::compose(dpdec::sampled_gaussian_curve(cal_q, sigma, orders),
                       static_cast<double>(cal_steps)),
        cal_delta);
    std::cout << std::setprecision(10) << "sigma=" << sigma << " eps=" << spend.epsilon
              << " delta=" << cal_delta << " order=" << spend.order << "\n";
  });

  // graphgen
  auto* gg = app.add_subcommand("graphgen", "search for a graph with a given connectivity");
  int gg_agents = 10;
  double gg_target = 0.4, gg_tol = 0.02;
  std::uint64_t gg_seed = 1;
  std::string gg_out;
  gg->add_option("--agents", gg_agents, "number of agents")->required();
  gg->add_option("--target-fiedler", gg_target, "target normalized fiedler value")->required();
  gg->add_option("--tolerance", gg_tol, "acceptance tolerance");
  gg->add_option("--seed", gg_seed, "search seed");
  gg->add_option("--out", gg_out, "edge list output path")->required();
  gg->callback([&] {
    dpdec::CommGraph g = dpdec::generate_graph(gg_agents, gg_target, gg_tol, gg_seed);
    dpdec::save_edge_list(g, gg_out);
    auto f = dpdec::fiedler_value(g);
    std::cout << std::setprecision(10) << "agents=" << g.size() << " edges=" << g.edges().size()
              << " normalized_fiedler=" << f.normalized << "\n";
    std::cout << "wrote " << gg_out << "\n";
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "repeat training along one axis");
  std::string sw_kind, sw_config, sw_values, sw_out, sw_algorithms;
  int sw_trials = 3;
  sw->add_option("--kind", sw_kind, "sigma, fiedler or split")->required();
  sw->add_option("--config", sw_config, "base json config")->required();
  sw->add_option("--values", sw_values, "comma separated axis values")->required();
  sw->add_option("--trials", sw_trials, "trials per point");
  sw->add_option("--algorithms", sw_algorithms, "comma separated algorithm overrides");
  sw->add_option("--out", sw_out, "csv output path")->required();
  sw->callback([&] {
    dpdec::ExperimentConfig base = dpdec::load_config(sw_config);
    auto values = parse_list(sw_values);
    std::vector<std::string> algos = sw_algorithms.empty()
                                         ? std::vector<std::string>{dpdec::algorithm_name(base.algorithm)}
                                         : parse_names(sw_algorithms);
    if (std::filesystem::exists(sw_out)) std::filesystem::remove(sw_out);
    for (const auto& name : algos) {
      dpdec::ExperimentConfig cfg = base;
      cfg.algorithm = dpdec::parse_algorithm(name);
      if (sw_kind == "fiedler") {
        auto pts = dpdec::connectivity_sweep(cfg, values, sw_trials);
        dpdec::write_sweep_csv(sw_out, name, "target_fiedler", pts);
      } else if (sw_kind == "split") {
        auto pts = dpdec::split_sweep(cfg, values, sw_trials);
        dpdec::write_sweep_csv(sw_out, name, "split_t", pts);
      } else if (sw_kind == "sigma") {
        auto res = dpdec::noise_scaling_study(cfg, values, sw_trials);
        std::cout << std::setprecision(10) << "algorithm=" << name << " slope=" << res.fit.slope
                  << " r_squared=" << res.fit.r_squared << "\n";
        std::ofstream out(sw_out, std::ios::app);
        if (out.tellp() == 0) out << "algorithm,sigma,gap\n";
        for (std::size_t i = 0; i < res.sigmas.size(); ++i)
          out << name << "," << std::setprecision(12) << res.sigmas[i] << "," << res.gaps[i]
              << "\n";
      } else {
        throw dpdec::error(dpdec::errc::config_invalid, "unknown sweep kind '" + sw_kind + "'");
      }
    }
    std::cout << "wrote " << sw_out << "\n";
  });

  // attack
  auto* at = app.add_subcommand("attack", "membership inference audit of a training setup");
  std::string at_config, at_out;
  std::uint64_t at_seed = 0;
  bool at_seed_set = false;
  at->add_option("--config", at_config, "json audit config")->required();
  at->add_option("--out", at_out, "per-model loss csv path");
  at->add_option("--seed", at_seed, "seed override")->each([&](const std::string&) {
    at_seed_set = true;
  });
  at->callback([&] {
    dpdec::AuditConfig audit = dpdec::load_audit_config(at_config);
    if (at_seed_set) audit.seed = at_seed;
    dpdec::AuditResult r = dpdec::run_membership_audit(audit);
    std::cout << std::setprecision(10) << "epsilon_lower_bound=" << r.epsilon_lower_bound
              << " violation=" << (r.violation ? 1 : 0) << " threshold=" << r.threshold.threshold
              << " tpr_lower=" << r.tpr_lower << " fpr_upper=" << r.fpr_upper
              << " eval_tp=" << r.eval_tp << " eval_fp=" << r.eval_fp
              << " per_arm=" << r.eval_per_arm;
    if (dpdec::is_private(audit.algorithm))
      std::cout << " sigma=" << r.sigma << " nominal_epsilon=" << r.nominal_epsilon;
    std::cout << "\n";
    if (!at_out.empty()) {
      dpdec::write_audit_losses_csv(at_out, r);
      std::cout << "wrote " << at_out << "\n";
    }
  });

  // dataset
  auto* ds = app.add_subcommand("dataset", "write the synthetic image corpus as idx files");
  std::string ds_out = ".";
  long ds_train = 0, ds_test = 0;
  double ds_noise = 0.22;
  std::uint64_t ds_seed = 1;
  ds->add_option("--out", ds_out, "output directory")->required();
  ds->add_option("--train-per-class", ds_train, "0 uses the canonical 60k histogram");
  ds->add_option("--test-per-class", ds_test, "0 uses the canonical 10k histogram");
  ds->add_option("--noise", ds_noise, "pixel noise level");
  ds->add_option("--seed", ds_seed, "corpus seed");
  ds->callback([&] {
    std::filesystem::create_directories(ds_out);
    dpdec::SyntheticImageConfig cfg;
    cfg.noise_std = ds_noise;
    cfg.seed = ds_seed;
    auto path = [&](const char* name) { return (std::filesystem::path(ds_out) / name).string(); };
    cfg.part = 0;
    cfg.class_counts =
        ds_train > 0 ? std::vector<long>(10, ds_train) : dpdec::canonical_train_counts();
    auto [train_px, train_lb] = dpdec::render_synthetic_images(cfg);
    dpdec::save_idx_images(path("train-images-idx3-ubyte"), cfg.rows, cfg.cols, train_px);
    dpdec::save_idx_labels(path("train-labels-idx1-ubyte"), train_lb);
    cfg.part = 1;
    cfg.class_counts =
        ds_test > 0 ? std::vector<long>(10, ds_test) : dpdec::canonical_test_counts();
    auto [test_px, test_lb] = dpdec::render_synthetic_images(cfg);
    dpdec::save_idx_images(path("t10k-images-idx3-ubyte"), cfg.rows, cfg.cols, test_px);
    dpdec::save_idx_labels(path("t10k-labels-idx1-ubyte"), test_lb);
    std::cout << "wrote " << train_lb.size() << " train and " << test_lb.size()
              << " test samples under " << ds_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dpdec::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
