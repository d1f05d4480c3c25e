// Command-line runner for the dynamical-percolation walk laboratory.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynperc/acceptance.hpp"
#include "dynperc/analytic.hpp"
#include "dynperc/couple.hpp"
#include "dynperc/engine.hpp"
#include "dynperc/estimate.hpp"
#include "dynperc/records.hpp"

using namespace dynperc;

namespace {

enum Exit { kOk = 0, kCriterionFailed = 1, kInvalidConfig = 2, kCensored = 3 };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string cmd;
  int d = 2;
  double p = 0.5;
  double mu = 1.0;
  double lambda = 0.0;
  double lambda2 = 1.0;
  std::vector<double> lambda_grid;
  std::vector<double> p_grid;
  std::vector<double> mu_grid;
  double eps = 0.05;
  std::optional<std::uint64_t> blocks;
  std::optional<double> horizon;
  std::uint64_t paths = 100000;
  std::uint64_t seed = 1;
  std::optional<int> replicas;
  std::string out;
  std::string format = "jsonl";
  std::string estimator = "direct";
  std::uint64_t group_size = kDefaultGroupSize;
  std::string suite = "all";
  std::optional<double> budget;

  nlohmann::json echo() const {
    nlohmann::json j = {{"cmd", cmd}, {"d", d},       {"p", p},       {"mu", mu},     {"lambda", lambda},
                        {"seed", seed}, {"format", format}};
    if (cmd == "couple-monotone-1d") j["lambda2"] = lambda2;
    if (!lambda_grid.empty()) j["lambda_grid"] = lambda_grid;
    if (!p_grid.empty()) j["p_grid"] = p_grid;
    if (!mu_grid.empty()) j["mu_grid"] = mu_grid;
    if (cmd == "couple-derivative") j["eps"] = eps;
    if (blocks) j["blocks"] = *blocks;
    if (horizon) {
      j["horizon"] = *horizon;
      j["paths"] = paths;
    }
    if (cmd == "simulate" || cmd == "sweep") j["estimator"] = estimator;
    if (cmd == "simulate") j["group_size"] = group_size;
    if (cmd == "verify") {
      j["suite"] = suite;
      if (budget) j["budget"] = *budget;
    }
    if (replicas) j["replicas"] = *replicas;
    return j;
  }

  RunControl control() const {
    RunControl c;
    if (replicas) c.threads = *replicas;
    return c;
  }
};

void require_increasing(const std::vector<double>& grid, const char* name) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError(std::string(name) + " must be strictly increasing");
  }
}

void validate(const RunConfig& c) {
  if (c.replicas && *c.replicas < 1) throw ConfigError("--replicas must be >= 1");
  if (c.format != "jsonl" && c.format != "csv") throw ConfigError("--format must be jsonl or csv");
  if (c.estimator != "direct" && c.estimator != "anchored") throw ConfigError("--estimator must be direct or anchored");
  require_increasing(c.lambda_grid, "--lambda-grid");
  require_increasing(c.p_grid, "--p-grid");
  require_increasing(c.mu_grid, "--mu-grid");
  const bool needs_work = c.cmd != "verify";
  if (needs_work && c.blocks && c.horizon) throw ConfigError("give exactly one of --blocks and --horizon");
  if (needs_work && !c.blocks && !c.horizon) {
    throw ConfigError(c.cmd == "simulate" ? "give exactly one of --blocks and --horizon" : "--blocks is required");
  }
  if (c.horizon && c.cmd != "simulate") throw ConfigError("--horizon is only accepted by simulate");
  if (c.blocks && *c.blocks < 2) throw ConfigError("--blocks must be >= 2");
  if (c.horizon && !(*c.horizon >= 0.0 && std::isfinite(*c.horizon))) throw ConfigError("--horizon must be >= 0");
  if (c.paths < 2) throw ConfigError("--paths must be >= 2");
}

ResultRecord base_record(const RunConfig& c, const ModelParams& params) {
  ResultRecord r;
  r.cmd = c.cmd;
  r.d = params.d();
  r.p = params.p();
  r.mu = params.mu();
  r.lambda = params.lambda();
  r.seed = c.seed;
  r.version = std::string(version());
  r.config = c.echo();
  return r;
}

Estimate tail_estimate(const TailFit& fit, std::uint64_t n) {
  Estimate e;
  e.value = fit.slope;
  e.std_error = fit.std_error;
  e.n = n;
  e.method = Method::direct;
  e.error_method = "bootstrap";
  return e;
}

std::vector<ResultRecord> cmd_simulate(const RunConfig& c) {
  const ModelParams params(c.d, c.p, c.mu, c.lambda);
  ResultRecord r = base_record(c, params);
  if (c.horizon) {
    if (params.lambda() > 0.0) {
      r.estimates.push_back({"martingale_mean",
                             check_martingale_identity(params, *c.horizon, c.paths, c.seed, {}, c.control()), {}});
    } else {
      r.estimates.push_back({"orthogonality_mean",
                             check_orthogonality(params, *c.horizon, c.paths, c.seed, {}, c.control()), {}});
    }
    return {r};
  }
  const auto blocks = block_sequence(params, *c.blocks, c.seed, {}, c.control());
  r.estimates.push_back({"v", estimate_speed_direct(blocks), {}});
  if (c.estimator == "anchored") {
    r.estimates.push_back({"v_anchored", estimate_speed_anchored(params, *c.blocks, c.seed, {}, c.control()), {}});
  }
  r.estimates.push_back({"sigma2", estimate_sigma2(blocks, c.seed), {}});
  r.estimates.push_back({"dv_formula", estimate_derivative_formula(blocks, params, c.seed), {}});
  r.estimates.push_back({"mean_tau", mean_tau(blocks), {}});
  if (blocks.size() >= 10000) {
    std::vector<double> tau(blocks.size()), ua(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      tau[i] = blocks[i].tau;
      ua[i] = static_cast<double>(blocks[i].attempts);
    }
    r.estimates.push_back({"tau_tail_slope", tail_estimate(fit_tail_exponent(tau, c.seed), blocks.size()), {}});
    r.estimates.push_back({"ua_tail_slope", tail_estimate(fit_tail_exponent(ua, c.seed), blocks.size()), {}});
  } else {
    r.extra["note"] = "tail fits need at least 10000 blocks";
  }
  if (blocks.size() >= c.group_size * kMinGroups) {
    const CltReport clt = check_clt(blocks, c.group_size);
    r.extra["clt"] = {{"groups", clt.groups}, {"ks_p_value", clt.ks_p_value}, {"skewness", clt.skewness}};
  }
  r.extra["exact_mean_tau"] = std::exp(1.0 / params.mu());
  return {r};
}

std::vector<ResultRecord> cmd_sweep(const RunConfig& c) {
  const std::vector<double> ls = c.lambda_grid.empty() ? std::vector<double>{c.lambda} : c.lambda_grid;
  const std::vector<double> ps = c.p_grid.empty() ? std::vector<double>{c.p} : c.p_grid;
  const std::vector<double> ms = c.mu_grid.empty() ? std::vector<double>{c.mu} : c.mu_grid;
  if (c.lambda_grid.empty() && c.p_grid.empty() && c.mu_grid.empty()) {
    throw ConfigError("sweep needs --lambda-grid or --p-grid/--mu-grid");
  }
  std::vector<ResultRecord> out;
  for (double p : ps) {
    for (double mu : ms) {
      for (double l : ls) {
        const auto start = std::chrono::steady_clock::now();
        ResultRecord r;
        try {
          const ModelParams params(c.d, p, mu, l);
          r = base_record(c, params);
          Estimate v;
          if (c.estimator == "anchored") {
            v = estimate_speed_anchored(params, *c.blocks, c.seed, {}, c.control());
          } else {
            v = estimate_speed_direct(block_sequence(params, *c.blocks, c.seed, {}, c.control()));
          }
          r.estimates.push_back({"v", v, {}});
          const auto regime = classify_regime(p, mu);
          const double gap = v.value - speed_totally_asymmetric_1d(p, mu);
          r.extra = {{"estimator", c.estimator},
                     {"regime", std::string(to_string(regime.verdict))},
                     {"gap_to_asymmetric", gap},
                     {"gap_z", v.std_error > 0 ? gap / v.std_error : 0.0}};
        } catch (const CensoredError&) {
          throw;
        } catch (const std::exception& e) {
          r.cmd = c.cmd;
          r.d = c.d;
          r.p = p;
          r.mu = mu;
          r.lambda = l;
          r.seed = c.seed;
          r.version = std::string(version());
          r.config = c.echo();
          r.status = "error";
          r.error = e.what();
        }
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

std::vector<ResultRecord> cmd_curve(const RunConfig& c) {
  if (c.lambda_grid.empty()) throw ConfigError("curve needs --lambda-grid");
  const ModelParams params(c.d, c.p, c.mu, 0.0);
  const auto blocks = block_sequence(params, *c.blocks, c.seed, {}, c.control());
  const auto tau = mean_tau(blocks);
  const auto curve = speed_curve_from_unbiased(make_histogram(blocks), tau, c.d, c.p, c.mu, c.lambda_grid);
  ResultRecord r = base_record(c, params);
  for (const auto& pt : curve) {
    r.estimates.push_back({"v", pt.speed, pt.lambda});
    r.estimates.push_back({"dv", pt.derivative, pt.lambda});
  }
  r.estimates.push_back({"sigma2", estimate_sigma2(blocks, c.seed), 0.0});
  r.estimates.push_back({"mean_tau", tau, {}});
  return {r};
}

std::vector<ResultRecord> cmd_couple_derivative(const RunConfig& c) {
  const ModelParams params(c.d, c.p, c.mu, c.lambda);
  ResultRecord r = base_record(c, params);
  r.estimates.push_back({"dv_coupled", estimate_derivative_coupled(params, c.eps, *c.blocks, c.seed, {}, c.control()), {}});
  const auto rates = coupling_rates(params, c.eps);
  r.extra = {{"C_exp_minus_lambda", derivative_constant(c.d, c.p, c.mu) * std::exp(-c.lambda)},
             {"q_good", rates.good},
             {"q_bad", rates.bad},
             {"q_very_bad", rates.very_bad},
             {"regime", std::string(to_string(classify_regime(c.p, c.mu).verdict))}};
  return {r};
}

std::vector<ResultRecord> cmd_couple_monotone(const RunConfig& c) {
  if (c.d != 1) throw ConfigError("couple-monotone-1d requires --d 1");
  const ModelParams params(1, c.p, c.mu, c.lambda);
  const auto s = monotone_pairs_1d(c.p, c.mu, c.lambda, c.lambda2, *c.blocks, c.seed, {}, c.control());
  ResultRecord r = base_record(c, params);
  r.estimates.push_back({"mean_gap", s.mean_gap, {}});
  const double n = static_cast<double>(s.blocks);
  const double ahead = static_cast<double>(s.strictly_ahead) / n;
  Estimate frac;
  frac.value = ahead;
  frac.std_error = std::sqrt(ahead * (1.0 - ahead) / n);
  frac.n = s.blocks;
  frac.method = Method::coupled_fd;
  frac.error_method = "sample";
  r.estimates.push_back({"p_strictly_ahead", frac, {}});
  r.extra = {{"ordered_blocks", s.ordered},
             {"lambda2", c.lambda2},
             {"separation_bound", monotone_separation_bound(c.mu, c.lambda, c.lambda2)},
             {"mean_tau", s.mean_tau}};
  return {r};
}

void write_records(const RunConfig& c, const std::vector<ResultRecord>& records) {
  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw ConfigError("cannot open output file " + c.out);
  }
  std::ostream& os = c.out.empty() ? std::cout : file;
  if (c.format == "csv") {
    os << csv_header() << '\n';
    for (const auto& r : records) {
      const std::string name = r.cmd == "couple-derivative"    ? "dv_coupled"
                               : r.cmd == "couple-monotone-1d" ? "mean_gap"
                                                               : "v";
      if (r.cmd == "curve") {
        // One row per lambda of the curve.
        for (const auto& ne : r.estimates) {
          if (ne.name != "v" || !ne.lambda) continue;
          ResultRecord row = r;
          row.lambda = *ne.lambda;
          row.estimates = {ne};
          os << *csv_row(row) << '\n';
        }
      } else if (auto row = csv_row(r, name)) {
        os << *row << '\n';
      }
    }
  } else {
    for (const auto& r : records) os << to_json(r).dump() << '\n';
  }
  if (!os) throw ConfigError("failed writing output");
}

void add_model_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--d", c.d, "lattice dimension")->capture_default_str();
  sub->add_option("--p", c.p, "edge-open probability")->capture_default_str();
  sub->add_option("--mu", c.mu, "refresh rate")->capture_default_str();
  sub->add_option("--lambda", c.lambda, "bias along e1")->capture_default_str();
}

void add_run_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
  sub->add_option("--replicas", c.replicas, "worker threads (default: DYNPERC_THREADS or all cores)");
  sub->add_option("--out", c.out, "output path (default: stdout)");
  sub->add_option("--format", c.format, "jsonl or csv")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Monte Carlo for lambda-biased walks in a refreshing bond-percolation environment"};
  app.require_subcommand(1);
  RunConfig c;

  auto* simulate = app.add_subcommand("simulate", "block estimators at one parameter point");
  add_model_flags(simulate, c);
  add_run_flags(simulate, c);
  simulate->add_option("--blocks", c.blocks, "number of regeneration blocks");
  simulate->add_option("--horizon", c.horizon, "fixed horizon: run the exact-identity checks instead");
  simulate->add_option("--paths", c.paths, "fixed-horizon runs with --horizon")->capture_default_str();
  simulate->add_option("--estimator", c.estimator, "direct or anchored")->capture_default_str();
  simulate->add_option("--group-size", c.group_size, "CLT group size")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "speed over a lambda grid or a (p, mu) grid");
  add_model_flags(sweep, c);
  add_run_flags(sweep, c);
  sweep->add_option("--blocks", c.blocks, "blocks per cell");
  sweep->add_option("--lambda-grid", c.lambda_grid, "comma-separated lambdas")->delimiter(',');
  sweep->add_option("--p-grid", c.p_grid, "comma-separated p values")->delimiter(',');
  sweep->add_option("--mu-grid", c.mu_grid, "comma-separated mu values")->delimiter(',');
  sweep->add_option("--estimator", c.estimator, "direct or anchored")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "run acceptance criteria");
  verify->add_option("--suite", c.suite, "all, a criterion name, or comma-separated ids")->capture_default_str();
  verify->add_option("--budget", c.budget, "seconds per criterion; exceeding it is inconclusive");
  verify->add_option("--seed", c.seed, "64-bit seed");
  verify->add_option("--replicas", c.replicas, "worker threads");
  verify->add_option("--out", c.out, "JSONL report path");

  auto* curve = app.add_subcommand("curve", "v and v' over a lambda list from unbiased blocks");
  add_model_flags(curve, c);
  add_run_flags(curve, c);
  curve->add_option("--blocks", c.blocks, "unbiased blocks");
  curve->add_option("--lambda-grid", c.lambda_grid, "comma-separated lambdas")->delimiter(',');

  auto* cderiv = app.add_subcommand("couple-derivative", "coupled finite-difference derivative");
  add_model_flags(cderiv, c);
  add_run_flags(cderiv, c);
  cderiv->add_option("--blocks", c.blocks, "coupled blocks");
  cderiv->add_option("--eps", c.eps, "bias increment")->capture_default_str();

  auto* mono = app.add_subcommand("couple-monotone-1d", "one-dimensional monotone coupling");
  add_model_flags(mono, c);
  add_run_flags(mono, c);
  mono->add_option("--blocks", c.blocks, "coupled blocks");
  mono->add_option("--lambda2", c.lambda2, "larger bias")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  c.cmd = chosen->get_name();
  if (c.cmd == "couple-monotone-1d" && chosen->count("--d") == 0) c.d = 1;

  try {
    validate(c);
    if (c.cmd == "verify") {
      SuiteOptions opts;
      opts.seed = chosen->count("--seed") ? c.seed : opts.seed;
      opts.budget_seconds = c.budget;
      opts.threads = c.replicas.value_or(0);
      const auto ids = select_criteria(c.suite);
      std::ofstream report;
      if (!c.out.empty()) {
        report.open(c.out);
        if (!report) throw ConfigError("cannot open output file " + c.out);
      }
      bool failed = false;
      for (int id : ids) {
        const CriterionResult res = run_criterion(id, opts);
        std::cout << format_result(res) << std::endl;
        failed = failed || res.verdict == Verdict::fail;
        if (report) {
          report << nlohmann::json{{"cmd", "verify"},
                                   {"criterion", res.id},
                                   {"name", res.name},
                                   {"verdict", std::string(to_string(res.verdict))},
                                   {"detail", res.detail},
                                   {"seconds", res.seconds},
                                   {"seed", opts.seed},
                                   {"version", std::string(version())}}
                        .dump()
                 << '\n';
        }
      }
      return failed ? kCriterionFailed : kOk;
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<ResultRecord> records;
    if (c.cmd == "simulate") records = cmd_simulate(c);
    else if (c.cmd == "sweep") records = cmd_sweep(c);
    else if (c.cmd == "curve") records = cmd_curve(c);
    else if (c.cmd == "couple-derivative") records = cmd_couple_derivative(c);
    else records = cmd_couple_monotone(c);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string stamp = utc_timestamp();
    for (auto& r : records) {
      if (c.cmd != "sweep") r.wall_time = wall;
      r.timestamp = stamp;
      if (r.status == "ok") check_finite(r);
    }
    write_records(c, records);
  } catch (const CensoredError& e) {
    std::cerr << "censored: " << e.what() << '\n';
    return kCensored;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kCensored;
  }
  return kOk;
}
