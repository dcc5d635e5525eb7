// Command-line driver: one subcommand per module, JSON config in, JSON/CSV out.
//
// Exit codes: 0 success, 1 a checked property failed, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "wiplab/wiplab.hpp"

namespace {

using namespace wiplab;
using ojson = nlohmann::ordered_json;

constexpr int kExitProperty = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

ojson ordered(const json& j) { return ojson::parse(j.dump()); }

// Temp file plus rename, so a reader never sees a partial artifact.
void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ojson envelope(const ExperimentConfig& cfg, const std::string& command) {
  ojson doc;
  doc["command"] = command;
  doc["config"] = ordered(config_to_json(cfg));
  doc["seed"] = cfg.seed;
  return doc;
}

void write_json(const ExperimentConfig& cfg, const std::string& name, ojson doc) {
  doc["complete"] = true;
  write_atomic(std::filesystem::path(cfg.out_dir) / name, doc.dump(2) + "\n");
}

void write_csv(const ExperimentConfig& cfg, const std::string& name, const std::string& body) {
  std::string text = "# config: " + config_to_json(cfg).dump() + "\n";
  text += "# seed: " + std::to_string(cfg.seed) + "\n";
  text += body;
  text += "# complete\n";
  write_atomic(std::filesystem::path(cfg.out_dir) / name, text);
}

std::ostringstream csv_stream() {
  std::ostringstream s;
  s.precision(17);
  return s;
}

const FiniteChain& require_finite(const ChainModel& model, const std::string& command) {
  const auto* chain = std::get_if<FiniteChain>(&model);
  if (!chain) throw PreconditionError(command + ": requires a model of kind \"finite\"");
  return *chain;
}

ojson matrix_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int run_spectral(const ExperimentConfig& cfg, const ChainModel& model) {
  const auto& chain = require_finite(model, "spectral");
  const auto sd = spectral_decompose(chain, cfg.m_max, symmetric_grid(cfg.epsilon0, cfg.t_points), cfg.epsilon0);
  const auto mc = mixing_constants(sd);

  const double pq = (sd.Pi * sd.Q).cwiseAbs().maxCoeff();
  const double qp = (sd.Q * sd.Pi).cwiseAbs().maxCoeff();
  const double split = (sd.Pi + sd.Q - chain.P()).cwiseAbs().maxCoeff();
  const double idem = (sd.Pi * sd.Pi - sd.Pi).cwiseAbs().maxCoeff();
  bool qbound = true;
  Eigen::MatrixXd Qm = Eigen::MatrixXd::Identity(chain.n_states(), chain.n_states());
  for (int m = 1; m <= cfg.m_max; ++m) {
    Qm = Qm * sd.Q;
    qbound = qbound && inf_norm(Qm) <= sd.C_Q * std::pow(sd.kappa, m) * (1.0 + 1e-9) + 1e-15;
  }
  const bool ok = pq <= 1e-10 && qp <= 1e-10 && split <= 1e-12 && idem <= 1e-10 && qbound;

  auto doc = envelope(cfg, "spectral");
  doc["model"] = ordered(model_to_json(model));
  doc["nu"] = std::vector<double>(sd.nu.data(), sd.nu.data() + sd.nu.size());
  doc["Pi"] = matrix_json(sd.Pi);
  doc["Q"] = matrix_json(sd.Q);
  doc["kappa"] = sd.kappa;
  doc["kappa_is_zero_sentinel"] = sd.kappa == 0.0;
  doc["kappa_from_eigensolver"] = sd.kappa_from_fallback;
  doc["C_Q"] = sd.C_Q;
  doc["C_P"] = sd.C_P;
  doc["norm_e"] = sd.norm_e;
  doc["norm_nu"] = sd.norm_nu;
  doc["norm_delta_x"] = sd.norm_delta_x;
  doc["m_max"] = sd.m_max;
  doc["t_grid"] = sd.t_grid;
  doc["mixing"] = {{"lambda0_x", mc.lambda0_x},
                   {"lambda1", mc.lambda1_infinite ? ojson("inf") : ojson(mc.lambda1)},
                   {"lambda1_infinite", mc.lambda1_infinite},
                   {"lambda2", mc.lambda2},
                   {"epsilon0", mc.epsilon0}};
  doc["checks"] = {{"max_abs_PiQ", pq}, {"max_abs_QPi", qp}, {"max_abs_Pi_plus_Q_minus_P", split},
                   {"max_abs_Pi2_minus_Pi", idem}, {"Q_power_bound", qbound}, {"passed", ok}};
  write_json(cfg, "spectral.json", doc);
  return ok ? 0 : kExitProperty;
}

int run_variance(const ExperimentConfig& cfg, const ChainModel& model) {
  auto rep = moment_report(model, cfg.delta);
  const auto long_run = long_run_variance(model);
  rep.c3_profile = c3_profile(model, long_run.sigma2, cfg.c3_n, cfg.c3_k, cfg.reps, cfg.seed, cfg.threads);
  bool ok = true;

  auto doc = envelope(cfg, "variance");
  doc["model"] = ordered(model_to_json(model));
  doc["mu"] = rep.mu;
  doc["sigma2"] = rep.sigma2;
  doc["method"] = to_string(rep.method);
  doc["long_run_sigma2"] = long_run.sigma2;
  doc["delta"] = rep.delta;
  if (const auto* chain = std::get_if<FiniteChain>(&model)) {
    const int K = *rep.series_truncation;
    doc["series_truncation"] = K;
    doc["series_sigma2"] = series_variance(*chain, K);
    doc["c2_value"] = rep.c2_value;
    const auto cov = covariance_decay(*chain, {0, 1, 2, 5, 10, 50}, {0, 1, 2, 3, 5, 8, 13, 21}, cfg.delta);
    int violations = 0;
    ojson rows = ojson::array();
    for (const auto& c : cov) {
      violations += c.abs_cov > c.bound;
      rows.push_back({{"l", c.l}, {"k", c.k}, {"abs_cov", c.abs_cov}, {"bound", c.bound}});
    }
    doc["covariance_decay"] = rows;
    doc["covariance_bound_violations"] = violations;
    ok = violations == 0;
  } else {
    doc["series_truncation"] = nullptr;
    doc["c2_value"] = mc_c2_value(model, cfg.delta, 1000, cfg.reps, cfg.seed);
  }
  ojson profile = ojson::array();
  auto csv = csv_stream();
  csv << "n,deviation,stderr,worst_k\n";
  for (const auto& p : rep.c3_profile) {
    profile.push_back({{"n", p.n}, {"deviation", p.deviation}, {"stderr", p.stderr_}, {"worst_k", p.worst_k}});
    csv << p.n << ',' << p.deviation << ',' << p.stderr_ << ',' << p.worst_k << '\n';
  }
  doc["c3_profile"] = profile;
  doc["c3_reference_sigma2"] = long_run.sigma2;
  write_json(cfg, "variance.json", doc);
  write_csv(cfg, "c3_profile.csv", csv.str());
  return ok ? 0 : kExitProperty;
}

int run_partition(const ExperimentConfig& cfg) {
  const double beta = cfg.beta_or_default();
  std::vector<Block> blocks;
  if (!cfg.k_list.empty()) {
    for (int k : cfg.k_list) blocks.push_back(build_block(k, cfg.epsilon, beta));
  } else {
    blocks = BlockPartition(cfg.N_list.back(), cfg.epsilon, beta, cfg.k0).blocks();
  }
  auto csv = csv_stream();
  csv << "k,j,kind,start,end,length\n";
  for (const auto& blk : blocks) {
    for (const auto& s : blk.segments) {
      csv << s.k << ',' << s.j << ',' << to_string(s.kind) << ',' << s.start << ',' << s.end << ',' << s.length()
          << '\n';
    }
  }
  write_csv(cfg, "partition.csv", csv.str());
  return 0;
}

int run_mixing(const ExperimentConfig& cfg, const ChainModel& model) {
  const auto& chain = require_finite(model, "mixing");
  const auto grid = symmetric_grid(cfg.epsilon0, cfg.t_points);
  const auto sd = spectral_decompose(chain, cfg.m_max, grid, cfg.epsilon0);
  const auto mc = mixing_constants(sd);
  std::vector<long> gaps;
  for (long g = 1; g <= cfg.k_gap_max; ++g) gaps.push_back(g);

  auto csv = csv_stream();
  csv << "k_gap,M1,M2,cards,defect,bound\n";
  int violations = 0;
  long evaluated = 0;
  double worst_ratio = 0.0;
  for (auto pattern : enumerate_patterns(cfg.max_intervals, cfg.max_card)) {
    const auto defects = c1_defects(chain, chain.x0(), pattern, gaps, grid);
    std::string cards;
    for (int m = 1; m <= pattern.M1 + pattern.M2; ++m) cards += (m > 1 ? "-" : "") + std::to_string(pattern.card(m));
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      pattern.k_gap = gaps[i];
      const double bound = c1_bound(mc, pattern);
      violations += defects[i] > bound;
      if (bound > 0.0) worst_ratio = std::max(worst_ratio, defects[i] / bound);
      ++evaluated;
      csv << gaps[i] << ',' << pattern.M1 << ',' << pattern.M2 << ',' << cards << ',' << defects[i] << ',' << bound
          << '\n';
    }
  }

  auto doc = envelope(cfg, "mixing");
  doc["model"] = ordered(model_to_json(model));
  doc["lambda0_x"] = mc.lambda0_x;
  doc["lambda1"] = mc.lambda1_infinite ? ojson("inf") : ojson(mc.lambda1);
  doc["lambda2"] = mc.lambda2;
  doc["cases"] = evaluated;
  doc["violations"] = violations;
  doc["max_defect_over_bound"] = worst_ratio;
  try {
    const auto fit = decay_fit(chain, chain.x0(), make_pattern(0, {1, 1}, 1, 0), gaps, grid);
    doc["decay_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2},
                        {"ln_kappa", std::log(sd.kappa)}, {"points", fit.gaps.size()}};
  } catch (const NumericalError& e) {
    doc["decay_fit"] = {{"error", e.what()}};
  }
  write_json(cfg, "mixing.json", doc);
  write_csv(cfg, "mixing.csv", csv.str());
  return violations == 0 ? 0 : kExitProperty;
}

int run_couple(const ExperimentConfig& cfg, const ChainModel& model) {
  const auto mv = long_run_variance(model);
  const double sigma = std::sqrt(mv.sigma2);
  const BlockPartition part(cfg.N, cfg.epsilon, cfg.beta_or_default(), cfg.k0);
  CouplingOptions opts;
  opts.reps_for_cdf = cfg.reps_for_cdf;
  opts.smoothing = cfg.smoothing;
  opts.epsilon0 = cfg.epsilon0;
  const CouplingPlan plan(model, mv.mu, sigma, part, opts);
  const auto trace = plan.build(cfg.seed, 0);

  auto csv = csv_stream();
  csv << "k,j,length,S,u,W2,i_star,residual\n";
  double max_residual = 0.0;
  int degenerate = 0;
  for (const auto& r : trace.islands) {
    max_residual = std::max(max_residual, r.residual);
    degenerate += r.degenerate;
    csv << r.k << ',' << r.j << ',' << r.length << ',' << r.S << ',' << r.u << ',' << r.w2 << ',' << r.i_star << ','
        << r.residual << '\n';
  }
  auto doc = envelope(cfg, "couple");
  doc["model"] = ordered(model_to_json(model));
  doc["mu"] = mv.mu;
  doc["sigma"] = sigma;
  doc["N"] = cfg.N;
  doc["beta"] = cfg.beta_or_default();
  doc["locator"] = {{"n", part.locator().n}, {"m", part.locator().m}};
  doc["islands"] = trace.islands.size();
  doc["degenerate_islands"] = degenerate;
  doc["max_residual"] = max_residual;
  doc["coupling_error"] = coupling_error(trace);
  doc["method"] = kSurrogateStatement;
  write_json(cfg, "couple.json", doc);
  write_csv(cfg, "couple_islands.csv", csv.str());
  return max_residual <= 1e-10 ? 0 : kExitProperty;
}

int run_rates(const ExperimentConfig& cfg, const ChainModel& model) {
  const auto mv = long_run_variance(model);
  CurveSettings cs;
  cs.epsilon = cfg.epsilon;
  cs.k0 = cfg.k0;
  cs.beta = cfg.beta_or_default();
  cs.threads = cfg.threads;
  cs.smoothing = cfg.smoothing;
  cs.epsilon0 = cfg.epsilon0;
  const auto fit = error_curve(model, mv.mu, std::sqrt(mv.sigma2), cfg.alpha, cfg.N_list, cfg.reps,
                               cfg.reps_for_cdf, cfg.seed, cs);
  auto csv = csv_stream();
  csv << "N,median_error,stderr\n";
  for (const auto& p : fit.points) csv << p.N << ',' << p.statistic << ',' << p.stderr_ << '\n';
  const auto rep = report({fit});
  auto doc = envelope(cfg, "rates");
  doc["model"] = ordered(model_to_json(model));
  doc["report"] = ordered(rep.json);
  doc["medians_decreasing"] = medians_decreasing(fit);
  doc["slope_ci_excludes_zero"] = fit.slope_hi < 0.0 || fit.slope_lo > 0.0;
  write_json(cfg, "rates_report.json", doc);
  write_csv(cfg, "rates.csv", csv.str());
  write_csv(cfg, "rates_report.csv", rep.csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wiplab: invariance-principle verification experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"spectral", "spectral decomposition and mixing constants of a finite chain"},
      {"variance", "mean, asymptotic variance and moment checks"},
      {"partition", "block/island/gap layout as CSV"},
      {"mixing", "characteristic-function factorization defects against the mixing bound"},
      {"couple", "one coupled pair of paths with per-island records"},
      {"rates", "coupling-error curve across N and its log-log slope"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required();
    sub->add_option("--seed", flags.seed, "override config seed");
    sub->add_option("--threads", flags.threads, "worker threads");
    sub->add_option("--out", flags.out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  ChainModel model = ArBernoulli(0.0, 0.0);
  try {
    cfg = load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.out) cfg.out_dir = *flags.out;
    cfg.validate(command == "rates", command != "partition");
    if (command != "partition") model = cfg.load();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (command == "spectral") return run_spectral(cfg, model);
    if (command == "variance") return run_variance(cfg, model);
    if (command == "partition") return run_partition(cfg);
    if (command == "mixing") return run_mixing(cfg, model);
    if (command == "couple") return run_couple(cfg, model);
    return run_rates(cfg, model);
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitProperty;
  }
}
