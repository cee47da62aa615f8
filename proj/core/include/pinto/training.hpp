#pragma once
// The physics-informed objective assembled over condition families, and the
// training loop around it: per-epoch batch shuffling, one tape and one
// synchronized optimizer step per batch, checkpoint cadence, divergence
// handling, and a data-driven variant that swaps residuals for reference
// mismatch.
//
// Loss shape, per condition k:
//   (lambda1 / n_batch) sum_j |residual_j|^2
//   + (lambda2 / n_ib) sum_j w_j |b_j - model(X_j)|^2
// summed over conditions. Boundary targets and periodic pairs enter every
// batch; per-segment weights ride on the targets.

#include <pinto/checkpoint.hpp>
#include <pinto/conditions.hpp>
#include <pinto/model.hpp>
#include <pinto/problems.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinto {

// Non-finite loss states raise this; the trainer converts it into an abort
// that keeps the last good checkpoint.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LossWeights {
  double lambda1 = 1.0;  // physics / data term
  double lambda2 = 1.0;  // boundary term
};

enum class ModelKind { Pinto, Deeponet };

struct ModelSpec {
  ModelKind kind = ModelKind::Pinto;
  ArchitectureConfig arch;
  DeepOnetConfig onet;
};

// everything the loss needs for one condition
struct ConditionData {
  Condition cond;
  BoundarySequence seq;
  CollocationSet colloc;
  Matrix guided;  // reference values at colloc.interior rows (data-driven mode)
};

struct LossBreakdown {
  double total = 0;
  double physics = 0, boundary = 0;  // weighted sums over conditions
  std::vector<double> physics_per_cond, boundary_per_cond;
};

// row-major flatten of a boundary-value matrix into the deeponet branch row
Matrix branch_row(const Matrix& values);

template <class E>
std::vector<typename E::V> model_forward(E& e, const ModelSpec& ms,
                                         typename E::V q,
                                         const BoundarySequence& seq) {
  if (ms.kind == ModelKind::Pinto)
    return pinto_forward(e, ms.arch, q, e.constant(seq.coords),
                         e.constant(seq.values));
  return deeponet_forward(e, ms.onet, q, e.constant(branch_row(seq.values)));
}

namespace detail {

inline Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<long>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<long>(i)) = m.row(rows[i]);
  return out;
}

template <class E>
double value_of(E& e, const typename E::V& v) {
  return e.peek(v).value()(0, 0);
}

template <class E>
void require_finite(E& e, const typename E::V& r, const PdeProblem& p,
                    const Condition& c, const Matrix& pts) {
  const auto val = e.peek(r).value();
  for (long i = 0; i < val.rows(); ++i)
    for (long j = 0; j < val.cols(); ++j)
      if (!std::isfinite(val(i, j))) {
        std::ostringstream msg;
        msg << "physics loss: non-finite residual, problem=" << p.name
            << " condition=" << c.index << " point=(";
        for (long d = 0; d < pts.cols(); ++d)
          msg << (d ? ", " : "") << pts(i, d);
        msg << ")";
        throw DivergenceError(msg.str());
      }
}

}  // namespace detail

// Builds the weighted objective on the engine for the given interior row
// subsets (one list per condition; pass nullptr to use every row) and
// returns the scalar root node. Term values are reported through `out`.
template <class E>
typename E::V physics_loss_nodes(E& e, const PdeProblem& p, const ModelSpec& ms,
                                 const std::vector<ConditionData>& conds,
                                 const std::vector<std::vector<int>>* batch_rows,
                                 const LossWeights& w, LossBreakdown* out) {
  using V = typename E::V;
  if (conds.empty()) throw std::invalid_argument("physics_loss: no conditions");
  if (batch_rows && batch_rows->size() != conds.size())
    throw std::invalid_argument("physics_loss: one row subset per condition");
  if (w.lambda1 < 0 || w.lambda2 < 0)
    throw std::invalid_argument("physics_loss: weights must be >= 0");

  std::optional<V> total;
  auto accum = [&e](std::optional<V>& acc, V t) {
    acc = acc ? e.add(*acc, t) : t;
  };
  if (out) *out = {};

  for (std::size_t k = 0; k < conds.size(); ++k) {
    const ConditionData& cd = conds[k];
    const std::vector<int>* rows = batch_rows ? &(*batch_rows)[k] : nullptr;
    Matrix interior =
        rows ? detail::take_rows(cd.colloc.interior, *rows) : cd.colloc.interior;
    if (interior.rows() == 0)
      throw std::invalid_argument("physics_loss: empty collocation batch");
    const double n_int = static_cast<double>(interior.rows());

    std::optional<V> phys;
    if (cd.guided.size() > 0) {
      // data-driven mode: mean squared mismatch against per-point references
      if (cd.guided.rows() != cd.colloc.interior.rows() ||
          cd.guided.cols() != p.field_count)
        throw std::invalid_argument("physics_loss: guided value shape mismatch");
      Matrix ref = rows ? detail::take_rows(cd.guided, *rows) : cd.guided;
      auto outs = model_forward(e, ms, e.constant(interior), cd.seq);
      for (std::size_t f = 0; f < outs.size(); ++f) {
        V diff = e.sub(outs[f], e.constant(Matrix(ref.col(static_cast<long>(f)))));
        accum(phys, e.wsum_sq(diff, {}, n_int));
      }
    } else {
      auto outs =
          model_forward(e, ms, e.leaf(jet_leaf(interior, p.jet_seeds)), cd.seq);
      auto res = residual_nodes(e, p, outs, cd.cond.value);
      for (const auto& r : res) {
        detail::require_finite(e, r, p, cd.cond, interior);
        accum(phys, e.wsum_sq(r, {}, n_int));
      }
    }
    V phys_node = e.scale(*phys, w.lambda1);

    const double n_ib = static_cast<double>(cd.colloc.targets.size() +
                                            cd.colloc.pairs.size());
    std::optional<V> bnd;
    if (!cd.colloc.targets.empty()) {
      std::map<std::vector<int>, std::vector<int>> groups;
      for (std::size_t i = 0; i < cd.colloc.targets.size(); ++i)
        groups[cd.colloc.targets[i].fields].push_back(static_cast<int>(i));
      for (const auto& [flds, idx] : groups) {
        const long g = static_cast<long>(idx.size());
        Matrix pts(g, p.coord_dim), bv(g, static_cast<long>(flds.size()));
        Vector wv(g);
        for (long i = 0; i < g; ++i) {
          const ValueTarget& t = cd.colloc.targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
          for (int d = 0; d < p.coord_dim; ++d) pts(i, d) = t.x[static_cast<std::size_t>(d)];
          for (std::size_t f = 0; f < flds.size(); ++f) bv(i, static_cast<long>(f)) = t.b[f];
          wv(i) = t.weight;
        }
        auto outs = model_forward(e, ms, e.constant(pts), cd.seq);
        for (std::size_t f = 0; f < flds.size(); ++f) {
          V diff = e.sub(outs[static_cast<std::size_t>(flds[f])],
                         e.constant(Matrix(bv.col(static_cast<long>(f)))));
          accum(bnd, e.wsum_sq(diff, wv, n_ib));
        }
      }
    }
    if (!cd.colloc.pairs.empty()) {
      std::map<std::vector<int>, std::vector<int>> groups;
      for (std::size_t i = 0; i < cd.colloc.pairs.size(); ++i)
        groups[cd.colloc.pairs[i].fields].push_back(static_cast<int>(i));
      for (const auto& [flds, idx] : groups) {
        const long g = static_cast<long>(idx.size());
        Matrix pa(g, p.coord_dim), pb(g, p.coord_dim);
        Vector wv(g);
        for (long i = 0; i < g; ++i) {
          const PeriodicPair& t = cd.colloc.pairs[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
          for (int d = 0; d < p.coord_dim; ++d) {
            pa(i, d) = t.xa[static_cast<std::size_t>(d)];
            pb(i, d) = t.xb[static_cast<std::size_t>(d)];
          }
          wv(i) = t.weight;
        }
        auto oa = model_forward(e, ms, e.constant(pa), cd.seq);
        auto ob = model_forward(e, ms, e.constant(pb), cd.seq);
        for (int f : flds) {
          V diff = e.sub(oa[static_cast<std::size_t>(f)], ob[static_cast<std::size_t>(f)]);
          accum(bnd, e.wsum_sq(diff, wv, n_ib));
        }
      }
    }
    V bnd_node = bnd ? e.scale(*bnd, w.lambda2) : e.constant(Matrix::Zero(1, 1));

    if (out) {
      double pv = detail::value_of(e, phys_node);
      double bv = detail::value_of(e, bnd_node);
      out->physics_per_cond.push_back(pv);
      out->boundary_per_cond.push_back(bv);
      out->physics += pv;
      out->boundary += bv;
    }
    accum(total, e.add(phys_node, bnd_node));
  }
  if (out) {
    out->total = detail::value_of(e, *total);
    if (!std::isfinite(out->total))
      throw DivergenceError("physics loss: non-finite loss total");
  }
  return *total;
}

// Full-set evaluation (no gradients); breakdown terms sum to the total.
LossBreakdown physics_loss(const ParameterStore& P, const PdeProblem& p,
                           const ModelSpec& ms,
                           const std::vector<ConditionData>& conds,
                           const LossWeights& w);

// Mean squared error of the model against reference values at the given
// points (all fields pooled).
double data_loss(const ParameterStore& P, const ModelSpec& ms,
                 const BoundarySequence& seq, const Matrix& points,
                 const Matrix& values);

struct TrainConfig {
  std::string problem = "advection";
  double beta = 0.1, nu = 0.01, re = 50.0;
  ModelSpec model;
  FamilyConfig family;
  int n_c = 2000, n_ib = 100, L = 40;
  std::int64_t epochs = 100;
  int batches = 1;
  OptimizerConfig opt;
  Schedule schedule;
  LossWeights weights;
  std::uint64_t init_seed = 1, sample_seed = 2;
  bool physics_guided = false;
  std::vector<Matrix> guided_values;  // per seen condition, n_c x fields
  std::string out_dir;      // empty: keep everything in memory
  std::string config_echo;  // stored verbatim in checkpoints
};

struct EpochStats {
  std::int64_t epoch = 0;  // 1-based
  double total = 0, physics = 0, boundary = 0, lr = 0;
};

struct TrainResult {
  Checkpoint last;  // final state, or last good checkpoint on divergence
  std::vector<EpochStats> history;
  bool diverged = false;
  std::string note;  // divergence diagnostic
};

PdeProblem train_problem(const TrainConfig& cfg);
void validate_train_config(const TrainConfig& cfg);
std::string train_config_echo(const TrainConfig& cfg);

// The deterministic data pipeline shared by training and evaluation:
// conditions, boundary sequences (positions shared across conditions), and
// per-condition collocation sets.
std::vector<ConditionData> prepare_conditions(const TrainConfig& cfg, bool seen);

ParameterStore init_model_params(const TrainConfig& cfg);

TrainResult train(const TrainConfig& cfg);
TrainResult train_resume(const TrainConfig& cfg, const Checkpoint& from);

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path);

}  // namespace pinto
