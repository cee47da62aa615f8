#include "pinto/training.hpp"

#include "pinto/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace pinto {

Matrix branch_row(const Matrix& values) {
  Matrix out(1, values.rows() * values.cols());
  long c = 0;
  for (long i = 0; i < values.rows(); ++i)
    for (long j = 0; j < values.cols(); ++j) out(0, c++) = values(i, j);
  return out;
}

LossBreakdown physics_loss(const ParameterStore& P, const PdeProblem& p,
                           const ModelSpec& ms,
                           const std::vector<ConditionData>& conds,
                           const LossWeights& w) {
  EvalEngine e(P);
  LossBreakdown br;
  physics_loss_nodes(e, p, ms, conds, nullptr, w, &br);
  return br;
}

double data_loss(const ParameterStore& P, const ModelSpec& ms,
                 const BoundarySequence& seq, const Matrix& points,
                 const Matrix& values) {
  if (points.rows() == 0) throw std::invalid_argument("data_loss: no points");
  if (points.rows() != values.rows())
    throw std::invalid_argument("data_loss: point/value row mismatch");
  EvalEngine e(P);
  auto outs = model_forward(e, ms, e.constant(points), seq);
  if (static_cast<long>(outs.size()) != values.cols())
    throw std::invalid_argument("data_loss: field count mismatch");
  double s = 0;
  for (std::size_t f = 0; f < outs.size(); ++f)
    s += (e.peek(outs[f]).value().col(0) - values.col(static_cast<long>(f)))
             .squaredNorm();
  return s / static_cast<double>(values.size());
}

PdeProblem train_problem(const TrainConfig& cfg) {
  return make_problem(cfg.problem, cfg.beta, cfg.nu, cfg.re);
}

namespace {

int problem_value_dim(const PdeProblem& p) {
  return p.field_count == 3 && p.name != "lid_cavity" ? 3 : 1;
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  auto p = train_problem(cfg);
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batches < 1 || cfg.batches > cfg.n_c)
    throw std::invalid_argument("train: batches must lie in [1, n_c]");
  if (cfg.n_c < 1 || cfg.n_ib < 1 || cfg.L < 1)
    throw std::invalid_argument("train: point counts must be >= 1");
  if (cfg.weights.lambda1 < 0 || cfg.weights.lambda2 < 0)
    throw std::invalid_argument("train: loss weights must be >= 0");
  cfg.schedule.validate();
  const int vdim = problem_value_dim(p);
  if (cfg.model.kind == ModelKind::Pinto) {
    const auto& a = cfg.model.arch;
    if (a.query_dim != p.coord_dim || a.boundary_dim != p.coord_dim)
      throw std::invalid_argument("train: architecture coordinate width must match the problem");
    if (a.fields != p.field_count)
      throw std::invalid_argument("train: architecture field count must match the problem");
    if (a.value_dim != vdim)
      throw std::invalid_argument("train: architecture value width must match the problem");
  } else {
    const auto& d = cfg.model.onet;
    if (d.trunk_in != p.coord_dim)
      throw std::invalid_argument("train: trunk width must match the problem");
    if (d.fields != p.field_count)
      throw std::invalid_argument("train: deeponet field count must match the problem");
    if (d.branch_in != cfg.L * vdim)
      throw std::invalid_argument("train: branch width must equal L x value width");
  }
  if (cfg.physics_guided) {
    if (cfg.guided_values.empty())
      throw std::invalid_argument("train: physics-guided mode needs reference values");
  }
}

std::string train_config_echo(const TrainConfig& cfg) {
  if (!cfg.config_echo.empty()) return cfg.config_echo;
  ExperimentConfig ec;
  ec.train = cfg;
  return format_config(ec);
}

std::vector<ConditionData> prepare_conditions(const TrainConfig& cfg,
                                              bool seen) {
  auto p = train_problem(cfg);
  auto set = make_conditions(p, cfg.family);
  const auto& list = seen ? set.seen : set.unseen;
  Rng base(cfg.sample_seed);
  std::vector<ConditionData> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    ConditionData cd;
    cd.cond = list[i];
    cd.seq = boundary_sequence(p, cd.cond, cfg.L, cfg.sample_seed);
    cd.colloc = sample_collocation(
        p, cd.cond, cfg.n_c, cfg.n_ib,
        base.fork(100 + static_cast<std::uint64_t>(cd.cond.index)).next_u64());
    if (seen && cfg.physics_guided) {
      const Matrix& g = cfg.guided_values.at(i);
      if (g.rows() != cfg.n_c || g.cols() != p.field_count)
        throw std::invalid_argument(
            "train: guided values must be n_c x field_count per condition");
      cd.guided = g;
    }
    out.push_back(std::move(cd));
  }
  return out;
}

ParameterStore init_model_params(const TrainConfig& cfg) {
  if (cfg.model.kind == ModelKind::Pinto)
    return init_params(cfg.model.arch, cfg.init_seed);
  return init_deeponet_params(cfg.model.onet, cfg.init_seed);
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("history: cannot open for write: " + path);
  f << "epoch,total_loss,physics_term,boundary_term,lr\n";
  char line[256];
  for (const auto& h : history) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(h.epoch), h.total, h.physics,
                  h.boundary, h.lr);
    f << line;
  }
  if (!f) throw std::runtime_error("history: write failed: " + path);
}

namespace {

std::vector<std::vector<int>> epoch_chunks(int n, int batches, Rng* rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(rng->uniform_int(0, i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  std::vector<std::vector<int>> out(static_cast<std::size_t>(batches));
  const int base = n / batches, rem = n % batches;
  int pos = 0;
  for (int b = 0; b < batches; ++b) {
    const int len = base + (b < rem ? 1 : 0);
    out[static_cast<std::size_t>(b)].assign(idx.begin() + pos,
                                            idx.begin() + pos + len);
    pos += len;
  }
  return out;
}

Checkpoint snapshot(const std::string& echo, const ParameterStore& P,
                    const OptimizerState& opt, std::int64_t next_epoch,
                    std::int64_t global_step, const Rng& shuf) {
  Checkpoint c;
  c.config_echo = echo;
  c.params = P;
  c.opt = opt;
  c.trainer = TrainerState{next_epoch, global_step, shuf.state()};
  return c;
}

std::string checkpoint_path(const std::string& dir, std::int64_t epoch) {
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint_e%06lld.bin",
                static_cast<long long>(epoch));
  return dir + "/" + name;
}

TrainResult run_loop(const TrainConfig& cfg, ParameterStore P,
                     OptimizerState opt, Rng shuf, std::int64_t start_epoch,
                     std::int64_t global_step) {
  const auto p = train_problem(cfg);
  const auto conds = prepare_conditions(cfg, true);
  if (conds.empty()) throw std::invalid_argument("train: no seen conditions");
  const auto echo = train_config_echo(cfg);
  const std::size_t K = conds.size();
  const std::int64_t cadence =
      std::max<std::int64_t>(1, cfg.epochs / 10);  // every 10% plus final

  if (!cfg.out_dir.empty())
    std::filesystem::create_directories(cfg.out_dir);

  TrainResult res;
  Checkpoint good = snapshot(echo, P, opt, start_epoch, global_step, shuf);

  for (std::int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<std::vector<std::vector<int>>> chunks(K);
    for (std::size_t k = 0; k < K; ++k)
      chunks[k] = epoch_chunks(cfg.n_c, cfg.batches, &shuf);

    double sum_total = 0, sum_phys = 0, sum_bnd = 0, lr_last = 0;
    for (int b = 0; b < cfg.batches && !res.diverged; ++b) {
      std::vector<std::vector<int>> rows(K);
      for (std::size_t k = 0; k < K; ++k)
        rows[k] = chunks[k][static_cast<std::size_t>(b)];
      P.zero_grad();
      TapeEngine tape(P);
      LossBreakdown br;
      try {
        auto root =
            physics_loss_nodes(tape, p, cfg.model, conds, &rows, cfg.weights, &br);
        tape.backward(root);
      } catch (const DivergenceError& err) {
        res.diverged = true;
        res.note = err.what();
        break;
      }
      const double lr = cfg.schedule.lr(global_step);
      optimizer_step(P, opt, lr);
      ++global_step;
      lr_last = lr;
      sum_total += br.total;
      sum_phys += br.physics;
      sum_bnd += br.boundary;
    }
    if (res.diverged) break;

    const double nb = static_cast<double>(cfg.batches);
    res.history.push_back(
        {epoch + 1, sum_total / nb, sum_phys / nb, sum_bnd / nb, lr_last});

    if ((epoch + 1) % cadence == 0 || epoch + 1 == cfg.epochs) {
      good = snapshot(echo, P, opt, epoch + 1, global_step, shuf);
      if (!cfg.out_dir.empty())
        write_checkpoint(good, checkpoint_path(cfg.out_dir, epoch + 1));
    }
  }

  res.last = std::move(good);
  if (!cfg.out_dir.empty()) {
    write_checkpoint(res.last, cfg.out_dir + "/checkpoint_final.bin");
    write_history_csv(res.history, cfg.out_dir + "/history.csv");
  }
  return res;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  validate_train_config(cfg);
  ParameterStore P = init_model_params(cfg);
  OptimizerState opt = make_optimizer(P, cfg.opt);
  Rng shuf(Rng(cfg.sample_seed).fork(999).next_u64());
  return run_loop(cfg, std::move(P), std::move(opt), shuf, 0, 0);
}

TrainResult train_resume(const TrainConfig& cfg, const Checkpoint& from) {
  validate_train_config(cfg);
  if (!from.trainer)
    throw std::invalid_argument("resume: checkpoint has no trainer state");
  ParameterStore fresh = init_model_params(cfg);
  if (from.params.names() != fresh.names())
    throw std::invalid_argument(
        "resume: checkpoint parameters do not match the configured architecture");
  for (const auto& name : fresh.names()) {
    const Matrix& a = from.params.value(name);
    const Matrix& b = fresh.value(name);
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw std::invalid_argument("resume: shape mismatch for " + name);
  }
  OptimizerState opt =
      from.opt ? *from.opt : make_optimizer(from.params, cfg.opt);
  Rng shuf;
  shuf.set_state(from.trainer->shuffle_rng);
  return run_loop(cfg, from.params, std::move(opt), shuf,
                  from.trainer->next_epoch, from.trainer->global_step);
}

}  // namespace pinto
