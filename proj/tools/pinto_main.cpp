// Config-driven command line: training, evaluation against the oracles,
// reference-field generation, gradient checks, and inference timing.
//
// Exit codes: 0 ok, 2 config, 3 divergence, 4 checkpoint/problem mismatch,
// 5 oracle failure, 6 gradient-check breach.

#include <CLI11.hpp>
#include <pinto/config.hpp>
#include <pinto/engine.hpp>
#include <pinto/metrics.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace pinto;

namespace {

enum ExitCode {
  exit_ok = 0,
  exit_config = 2,
  exit_diverged = 3,
  exit_mismatch = 4,
  exit_oracle = 5,
  exit_gradcheck = 6,
};

int fail(int code, const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return code;
}

// PINTO_OUT_ROOT overrides the configured output root; the run name keeps
// runs apart under it
std::string resolve_out_dir(const ExperimentConfig& ec) {
  const char* env = std::getenv("PINTO_OUT_ROOT");
  std::string root = env && *env ? env
                     : ec.train.out_dir.empty() ? "runs"
                                                : ec.train.out_dir;
  std::string name = ec.run_name.empty() ? ec.train.problem : ec.run_name;
  return root + "/" + name;
}

std::vector<int> default_eval_grid(const std::string& problem) {
  if (problem == "beltrami") return {64, 64, 20};
  if (problem == "kovasznay" || problem == "lid_cavity") return {64, 64};
  return {256, 101};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

// checkpoint parameters must match the architecture its own echo describes
void check_checkpoint_params(const TrainConfig& cfg, const ParameterStore& ck) {
  ParameterStore fresh = init_model_params(cfg);
  if (fresh.names() != ck.names())
    throw std::runtime_error("checkpoint parameters do not match the architecture");
  for (const auto& n : fresh.names())
    if (fresh.value(n).rows() != ck.value(n).rows() ||
        fresh.value(n).cols() != ck.value(n).cols())
      throw std::runtime_error("checkpoint shape mismatch for " + n);
}

struct LoadedCheckpoint {
  Checkpoint ck;
  ExperimentConfig ec;
};

LoadedCheckpoint load_checkpoint_with_config(const std::string& path) {
  LoadedCheckpoint lc;
  lc.ck = read_checkpoint(path);
  lc.ec = parse_config_text(lc.ck.config_echo);
  check_checkpoint_params(lc.ec.train, lc.ck.params);
  return lc;
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
  ExperimentConfig ec;
  try {
    ec = load_config(config_path);
    ec.train.out_dir = resolve_out_dir(ec);
    if (ec.train.physics_guided) {
      std::vector<int> grid = ec.guided_grid.empty()
                                  ? default_guided_grid(ec.train.problem)
                                  : ec.guided_grid;
      ec.train.guided_values = guided_reference_values(ec.train, grid);
    }
    ec.train.config_echo = format_config(ec);
    validate_train_config(ec.train);
  } catch (const std::exception& e) {
    return fail(exit_config, e.what());
  }

  Checkpoint from;
  if (!resume_path.empty()) {
    try {
      from = read_checkpoint(resume_path);
    } catch (const std::exception& e) {
      return fail(exit_mismatch, e.what());
    }
  }

  try {
    std::filesystem::create_directories(ec.train.out_dir);
    write_text(ec.train.out_dir + "/config-resolved.cfg", ec.train.config_echo);
    TrainResult res = resume_path.empty() ? train(ec.train)
                                          : train_resume(ec.train, from);
    const EpochStats& last = res.history.empty() ? EpochStats{} : res.history.back();
    std::cout << "run: " << ec.train.out_dir << "\n"
              << "epochs: " << last.epoch << "/" << ec.train.epochs
              << "  total_loss: " << last.total << "  lr: " << last.lr << "\n";
    if (res.diverged) {
      std::cerr << "diverged: " << res.note << "\n";
      return exit_diverged;
    }
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    // resume shape/architecture conflicts surface here
    return fail(exit_mismatch, e.what());
  } catch (const std::exception& e) {
    return fail(exit_config, e.what());
  }
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& problem,
                 std::vector<int> grid, const std::vector<double>& times,
                 const std::vector<double>& sweep_re,
                 const std::vector<double>& sweep_lid, int unseen_count,
                 const std::vector<double>& unseen_values, std::string out_dir) {
  LoadedCheckpoint lc;
  try {
    lc = load_checkpoint_with_config(ckpt_path);
    if (!problem.empty() && problem != lc.ec.train.problem)
      throw std::runtime_error("checkpoint was trained on '" +
                               lc.ec.train.problem + "', not '" + problem + "'");
  } catch (const std::exception& e) {
    return fail(exit_mismatch, e.what());
  }

  TrainConfig cfg = lc.ec.train;
  if (unseen_count >= 0) cfg.family.unseen_count = unseen_count;
  if (!unseen_values.empty()) cfg.family.unseen_values = unseen_values;
  if (grid.empty()) grid = default_eval_grid(cfg.problem);
  if (out_dir.empty())
    out_dir = std::filesystem::path(ckpt_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";

  try {
    std::filesystem::create_directories(out_dir);
    MetricReport rep = evaluate_model(lc.ck.params, cfg, grid);
    std::string table = format_metric_table(rep);
    std::cout << table;
    write_metric_csv(rep, out_dir + "/metrics.csv");
    write_text(out_dir + "/metrics.txt", table);
    if (!times.empty()) {
      std::vector<int> spatial(grid.begin(), grid.end() - 1);
      write_sweep_csv(sweep(lc.ck.params, cfg, "time", times, spatial),
                      out_dir + "/sweep_time.csv");
    }
    if (!sweep_re.empty())
      write_sweep_csv(sweep(lc.ck.params, cfg, "re", sweep_re, grid),
                      out_dir + "/sweep_re.csv");
    if (!sweep_lid.empty())
      write_sweep_csv(sweep(lc.ck.params, cfg, "lid", sweep_lid, grid),
                      out_dir + "/sweep_lid.csv");
    return exit_ok;
  } catch (const std::exception& e) {
    return fail(exit_oracle, e.what());
  }
}

int cmd_oracle(const std::string& problem, double beta, double nu, double re,
               std::uint64_t family_seed, int index, double value,
               bool value_set, int wave_n, int wave_n_max, int grf_grid,
               const std::vector<int>& grid, double t_end,
               const std::string& out_path) {
  PdeProblem p;
  Condition c;
  GridSpec spec;
  try {
    p = make_problem(problem, beta, nu, re);
    if (static_cast<int>(grid.size()) != p.coord_dim)
      throw std::runtime_error("grid needs " + std::to_string(p.coord_dim) +
                               " comma-separated sizes for " + problem);
    for (int s : grid)
      if (s < 2) throw std::runtime_error("each grid axis needs at least 2 nodes");
    FamilyConfig fam;
    fam.seed = family_seed;
    fam.wave_n = wave_n;
    fam.wave_n_max = wave_n_max;
    fam.grf_grid = grf_grid;
    if (problem == "kovasznay" || problem == "beltrami" ||
        problem == "lid_cavity") {
      if (!value_set)
        throw std::runtime_error("--value (reynolds number / lid speed) required for " +
                                 problem);
      fam.seen_values = {value};
      c = make_conditions(p, fam).seen[0];
    } else {
      if (index < 0) throw std::runtime_error("--index must be >= 0");
      fam.seen_count = index + 1;
      c = make_conditions(p, fam).seen[static_cast<std::size_t>(index)];
    }
    spec.sizes = grid;
    if (t_end > 0) {
      if (p.steady) throw std::runtime_error("--t-end applies to unsteady problems");
      spec.extents = p.bounds;
      spec.extents.back() = {0.0, t_end};
    }
  } catch (const std::exception& e) {
    return fail(exit_config, e.what());
  }

  try {
    ReferenceField f = oracle_field(p, c, spec);
    write_reference_csv(f, out_path);
    std::cout << "oracle: " << out_path << "  nodes: " << f.node_count()
              << "  fields: " << f.field_count() << "\n";
    return exit_ok;
  } catch (const std::exception& e) {
    return fail(exit_oracle, e.what());
  }
}

// reverse-mode parameter gradients and forward coordinate jets versus finite
// differences on a small fresh network
int cmd_gradcheck(int embed, std::uint64_t seed, double tol) {
  TrainConfig cfg;
  cfg.problem = "burgers";  // jets to second order in x, first in t
  ArchitectureConfig& a = cfg.model.arch;
  a.query_dim = 2;
  a.boundary_dim = 2;
  a.value_dim = 1;
  a.fields = 1;
  a.embed = embed;
  a.heads = 1;
  a.key_dim = embed;
  a.encoder_layers = 1;
  a.cau_count = 1;
  a.cau_dense_layers = 1;
  a.head_hidden_layers = 1;
  a.activation = Act::Tanh;
  cfg.family.seed = seed;
  cfg.family.seen_count = 2;
  cfg.n_c = 8;
  cfg.n_ib = 5;
  cfg.L = 4;
  cfg.init_seed = seed;
  cfg.sample_seed = seed + 1;

  PdeProblem p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);
  LossWeights w;

  P.zero_grad();
  {
    TapeEngine e(P);
    LossBreakdown bd;
    auto root = physics_loss_nodes(e, p, cfg.model, conds, nullptr, w, &bd);
    e.backward(root);
  }

  double worst = 0;
  std::string worst_name;
  std::printf("%-18s %12s\n", "parameter", "max rel err");
  for (const auto& name : P.names()) {
    Matrix& val = P.value(name);
    const Matrix g = P.grad(name);
    double local = 0;
    for (long i = 0; i < val.rows(); ++i)
      for (long j = 0; j < val.cols(); ++j) {
        const double keep = val(i, j);
        const double h = 1e-6 * std::max(1.0, std::abs(keep));
        val(i, j) = keep + h;
        const double up = physics_loss(P, p, cfg.model, conds, w).total;
        val(i, j) = keep - h;
        const double dn = physics_loss(P, p, cfg.model, conds, w).total;
        val(i, j) = keep;
        const double fd = (up - dn) / (2 * h);
        const double rel = std::abs(fd - g(i, j)) /
                           std::max({std::abs(fd), std::abs(g(i, j)), 1e-3});
        local = std::max(local, rel);
      }
    std::printf("%-18s %12.3e\n", name.c_str(), local);
    if (local > worst) {
      worst = local;
      worst_name = name;
    }
  }

  // coordinate jets at a few interior points against central differences:
  // 4th-order stencils for first derivatives, 2nd-order for second
  double jet_worst = 0;
  const double hx = 1e-4;
  for (double x : {0.3, 0.62}) {
    for (double t : {0.25, 0.7}) {
      Matrix q(1, 2);
      q << x, t;
      EvalEngine e(P);
      auto outs =
          model_forward(e, cfg.model, e.leaf(jet_leaf(q, p.jet_seeds)), conds[0].seq);
      const Batch& b = e.peek(outs[0]);
      for (std::size_t d = 0; d < p.jet_seeds.size(); ++d) {
        const int col = p.jet_seeds[d].first;
        auto probe = [&](double eps) {
          Matrix qq = q;
          qq(0, col) += eps;
          EvalEngine pe(P);
          auto o = model_forward(pe, cfg.model, pe.constant(qq), conds[0].seq);
          return pe.peek(o[0]).value()(0, 0);
        };
        auto track = [&](double got, double fd) {
          const double rel =
              std::abs(got - fd) / std::max({std::abs(got), std::abs(fd), 1e-3});
          jet_worst = std::max(jet_worst, rel);
        };
        const double fd1 = (-probe(2 * hx) + 8 * probe(hx) - 8 * probe(-hx) +
                            probe(-2 * hx)) /
                           (12 * hx);
        track(b.deriv(static_cast<int>(d), 1)(0, 0), fd1);
        if (p.jet_seeds[d].second >= 2) {
          const double fd2 =
              (probe(hx) - 2 * probe(0) + probe(-hx)) / (hx * hx);
          track(b.deriv(static_cast<int>(d), 2)(0, 0), fd2);
        }
      }
    }
  }
  std::printf("%-18s %12.3e\n", "coordinate jets", jet_worst);
  if (jet_worst > worst) worst_name = "coordinate jets";
  std::printf("worst: %s (%.3e), tolerance %.1e\n", worst_name.c_str(),
              std::max(worst, jet_worst), tol);
  if (worst > tol || jet_worst > tol) {
    std::cerr << "gradient check failed\n";
    return exit_gradcheck;
  }
  return exit_ok;
}

int cmd_timing(const std::string& ckpt_path, std::vector<int> grid, int passes) {
  LoadedCheckpoint lc;
  try {
    lc = load_checkpoint_with_config(ckpt_path);
  } catch (const std::exception& e) {
    return fail(exit_mismatch, e.what());
  }
  TrainConfig cfg = lc.ec.train;
  if (grid.empty()) {
    grid = default_eval_grid(cfg.problem);
    PdeProblem p = train_problem(cfg);
    if (p.coord_dim == 2 && !p.steady) grid = {1024, 100};
  }

  try {
    PdeProblem p = train_problem(cfg);
    ConditionSet set = make_conditions(p, cfg.family);
    const Condition& c = set.seen.at(0);
    long n = 1;
    for (int s : grid) n *= s;
    // mesh the grid once; timing covers the forward pass only
    ReferenceField probe = predict_field(lc.ck.params, cfg, c, grid);  // warmup
    Matrix coords(n, p.coord_dim);
    for (long r = 0; r < n; ++r) {
      auto x = probe.node_coords(r);
      for (int d = 0; d < p.coord_dim; ++d)
        coords(r, d) = x[static_cast<std::size_t>(d)];
    }
    std::vector<double> ms;
    for (int i = 0; i < passes; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      Matrix out = predict_at(lc.ck.params, cfg, c, coords);
      auto t1 = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double mean = 0;
    for (double v : ms) mean += v;
    mean /= static_cast<double>(ms.size());
    double var = 0;
    for (double v : ms) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(ms.size()));
    std::printf("grid:");
    for (int s : grid) std::printf(" %d", s);
    std::printf("  nodes: %ld  passes: %d\n", n, passes);
    std::printf("forward pass: mean %.3f ms, std %.3f ms\n", mean, sd);
    return exit_ok;
  } catch (const std::exception& e) {
    return fail(exit_config, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-informed transformer neural operator"};
  app.require_subcommand(1);

  auto* tr = app.add_subcommand("train", "train a model from a config file");
  std::string tr_config, tr_resume;
  tr->add_option("--config", tr_config, "key=value experiment config")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");

  auto* ev = app.add_subcommand("evaluate", "compare a checkpoint against the oracle");
  std::string ev_ckpt, ev_problem, ev_out;
  std::vector<int> ev_grid;
  std::vector<double> ev_times, ev_re, ev_lid, ev_unseen_values;
  int ev_unseen_count = -1;
  ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  ev->add_option("--problem", ev_problem, "expected problem (mismatch -> exit 4)");
  ev->add_option("--grid", ev_grid, "evaluation grid sizes")->delimiter(',');
  ev->add_option("--times", ev_times, "time sweep values")->delimiter(',');
  ev->add_option("--sweep-re", ev_re, "reynolds sweep values")->delimiter(',');
  ev->add_option("--sweep-lid", ev_lid, "lid-speed sweep values")->delimiter(',');
  ev->add_option("--unseen-count", ev_unseen_count, "override unseen condition count");
  ev->add_option("--unseen-values", ev_unseen_values, "override unseen values")->delimiter(',');
  ev->add_option("--out", ev_out, "output directory (default: checkpoint dir)");

  auto* orc = app.add_subcommand("oracle", "write a reference field CSV");
  std::string orc_problem, orc_out;
  double orc_beta = 0.1, orc_nu = 0.01, orc_re = 50.0, orc_value = 0.0,
         orc_t_end = 0.0;
  std::uint64_t orc_seed = 1;
  int orc_index = 0, orc_wave_n = 2, orc_wave_n_max = 4, orc_grf = 256;
  std::vector<int> orc_grid;
  orc->add_option("--problem", orc_problem, "benchmark name")->required();
  orc->add_option("--grid", orc_grid, "grid sizes per axis")->required()->delimiter(',');
  orc->add_option("--out", orc_out, "output CSV path")->required();
  orc->add_option("--beta", orc_beta, "advection speed");
  orc->add_option("--nu", orc_nu, "burgers viscosity");
  orc->add_option("--re", orc_re, "lid reynolds number");
  orc->add_option("--family-seed", orc_seed, "condition family seed");
  orc->add_option("--index", orc_index, "condition index within the family");
  auto* orc_value_opt =
      orc->add_option("--value", orc_value, "reynolds number / lid speed");
  orc->add_option("--wave-n", orc_wave_n, "sinusoidal wave count");
  orc->add_option("--wave-n-max", orc_wave_n_max, "max integer wavenumber");
  orc->add_option("--grf-grid", orc_grf, "grf resolution (power of two)");
  orc->add_option("--t-end", orc_t_end, "extend the time axis to [0, t_end]");

  auto* gc = app.add_subcommand("gradcheck", "gradients and jets versus finite differences");
  int gc_embed = 4;
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-5;
  gc->add_option("--embed", gc_embed, "embedding width of the probe model");
  gc->add_option("--seed", gc_seed, "init/sampling seed");
  gc->add_option("--tol", gc_tol, "max relative error tolerance");

  auto* tm = app.add_subcommand("timing", "mean forward-pass time over repeated runs");
  std::string tm_ckpt;
  std::vector<int> tm_grid;
  int tm_passes = 10;
  tm->add_option("--checkpoint", tm_ckpt, "trained checkpoint")->required();
  tm->add_option("--grid", tm_grid, "inference grid sizes")->delimiter(',');
  tm->add_option("--passes", tm_passes, "timed passes after one warmup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  if (*tr) return cmd_train(tr_config, tr_resume);
  if (*ev)
    return cmd_evaluate(ev_ckpt, ev_problem, ev_grid, ev_times, ev_re, ev_lid,
                        ev_unseen_count, ev_unseen_values, ev_out);
  if (*orc)
    return cmd_oracle(orc_problem, orc_beta, orc_nu, orc_re, orc_seed, orc_index,
                      orc_value, orc_value_opt->count() > 0, orc_wave_n,
                      orc_wave_n_max, orc_grf, orc_grid, orc_t_end, orc_out);
  if (*gc) return cmd_gradcheck(gc_embed, gc_seed, gc_tol);
  if (*tm) return cmd_timing(tm_ckpt, tm_grid, tm_passes);
  return exit_config;
}
