#include <pinto/engine.hpp>
#include <pinto/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pinto {

namespace {

void check_pair(const Vector& h, const Vector& h_hat, const char* who) {
  if (h.size() != h_hat.size())
    throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (h.size() == 0)
    throw std::invalid_argument(std::string(who) + ": empty input");
}

}  // namespace

StandardMetrics standard_metrics(const Vector& h, const Vector& h_hat) {
  check_pair(h, h_hat, "standard_metrics");
  const double n = static_cast<double>(h.size());
  Vector diff = h - h_hat;
  StandardMetrics m;
  m.rmse = std::sqrt(diff.squaredNorm() / n);
  m.mae = diff.cwiseAbs().mean();
  const double rms_h = std::sqrt(h.squaredNorm() / n);
  const double mean_abs_h = h.cwiseAbs().mean();
  if (rms_h > 0) m.nrmse = m.rmse / rms_h;
  if (mean_abs_h > 0) m.mape = m.mae / mean_abs_h;
  return m;
}

ModifiedRelError modified_relative_error(const Vector& h, const Vector& h_hat) {
  check_pair(h, h_hat, "modified_relative_error");
  ModifiedRelError r;
  r.pointwise = ((h - h_hat).array().abs() / (1.0 + h.array().abs())).matrix();
  r.mean = r.pointwise.mean();
  r.stddev = std::sqrt((r.pointwise.array() - r.mean).square().mean());
  return r;
}

GroupMetrics aggregate_group(const std::vector<double>& condition_means,
                             const Vector& pooled_mre, const Vector& pooled_h,
                             const Vector& pooled_hat) {
  GroupMetrics g;
  g.conditions = static_cast<long>(condition_means.size());
  g.points = pooled_mre.size();
  if (condition_means.empty()) return g;
  if (pooled_mre.size() != pooled_h.size() ||
      pooled_h.size() != pooled_hat.size())
    throw std::invalid_argument("aggregate_group: pooled length mismatch");
  double s = 0;
  for (double v : condition_means) s += v;
  g.mre_mean = s / static_cast<double>(condition_means.size());
  const double pooled_mean = pooled_mre.mean();
  g.mre_std = std::sqrt((pooled_mre.array() - pooled_mean).square().mean());
  g.standard = standard_metrics(pooled_h, pooled_hat);
  return g;
}

Matrix predict_at(const ParameterStore& P, const TrainConfig& cfg,
                  const Condition& c, const Matrix& coords) {
  PdeProblem p = train_problem(cfg);
  if (coords.cols() != p.coord_dim)
    throw std::invalid_argument("predict_at: coordinate dim mismatch");
  BoundarySequence seq = boundary_sequence(p, c, cfg.L, cfg.sample_seed);
  Matrix out(coords.rows(), p.field_count);
  const long chunk = 8192;
  for (long r0 = 0; r0 < coords.rows(); r0 += chunk) {
    const long nr = std::min(chunk, coords.rows() - r0);
    EvalEngine e(P);
    auto outs = model_forward(e, cfg.model,
                              e.constant(Matrix(coords.middleRows(r0, nr))), seq);
    for (int f = 0; f < p.field_count; ++f)
      out.col(f).segment(r0, nr) = e.peek(outs[static_cast<std::size_t>(f)]).value();
  }
  return out;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a.push_back(lo + (hi - lo) * i / (n - 1.0));
  return a;
}

Matrix field_coords(const ReferenceField& f) {
  Matrix m(f.node_count(), f.axis_count());
  for (long r = 0; r < f.node_count(); ++r) {
    auto x = f.node_coords(r);
    for (int d = 0; d < f.axis_count(); ++d)
      m(r, d) = x[static_cast<std::size_t>(d)];
  }
  return m;
}

// headline signal per problem: the scalar field, or the velocity magnitude
Vector signal_of(const Matrix& values, int field_count) {
  if (field_count == 1) return values.col(0);
  return (values.col(0).array().square() + values.col(1).array().square())
      .sqrt()
      .matrix();
}

void append(std::vector<double>* pool, const Vector& v) {
  pool->insert(pool->end(), v.data(), v.data() + v.size());
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

ReferenceField predict_field(const ParameterStore& P, const TrainConfig& cfg,
                             const Condition& c, const std::vector<int>& sizes) {
  PdeProblem p = train_problem(cfg);
  if (static_cast<int>(sizes.size()) != p.coord_dim)
    throw std::invalid_argument("predict_field: grid rank mismatch");
  for (int s : sizes)
    if (s < 2)
      throw std::invalid_argument("predict_field: each axis needs at least 2 nodes");
  ReferenceField f;
  f.provenance = "model";
  if (p.coord_dim == 3) f.axis_names = {"x", "y", "t"};
  else f.axis_names = p.steady ? std::vector<std::string>{"x", "y"}
                               : std::vector<std::string>{"x", "t"};
  f.axes.resize(static_cast<std::size_t>(p.coord_dim));
  for (int d = 0; d < p.coord_dim; ++d)
    f.axes[static_cast<std::size_t>(d)] =
        linspace(p.bounds[static_cast<std::size_t>(d)].first,
                 p.bounds[static_cast<std::size_t>(d)].second,
                 sizes[static_cast<std::size_t>(d)]);
  f.field_names = p.field_count == 1 ? std::vector<std::string>{"u"}
                                     : std::vector<std::string>{"u", "v", "p"};
  f.values = predict_at(P, cfg, c, field_coords(f));
  return f;
}

MetricReport evaluate_model(const ParameterStore& P, const TrainConfig& cfg,
                            const std::vector<int>& sizes) {
  PdeProblem p = train_problem(cfg);
  ConditionSet set = make_conditions(p, cfg.family);
  MetricReport rep;
  rep.problem = p.name;
  rep.field = p.field_count == 1 ? "u" : "|V|";

  struct Pool {
    std::vector<double> means, mre, h, hat;
  } pools[2];

  auto run = [&](const std::vector<Condition>& conds, bool seen) {
    Pool& pool = pools[seen ? 0 : 1];
    for (const Condition& c : conds) {
      ReferenceField ref = oracle_field(p, c, {sizes, {}});
      Matrix pred = predict_at(P, cfg, c, field_coords(ref));
      Vector h = signal_of(ref.values, p.field_count);
      Vector hat = signal_of(pred, p.field_count);
      ModifiedRelError mre = modified_relative_error(h, hat);
      ConditionMetrics cm;
      cm.condition_index = c.index;
      cm.seen = seen;
      cm.value = c.value;
      cm.points = h.size();
      cm.mre_mean = mre.mean;
      cm.mre_std = mre.stddev;
      cm.standard = standard_metrics(h, hat);
      rep.conditions.push_back(cm);
      pool.means.push_back(mre.mean);
      append(&pool.mre, mre.pointwise);
      append(&pool.h, h);
      append(&pool.hat, hat);
    }
  };
  run(set.seen, true);
  run(set.unseen, false);
  rep.seen = aggregate_group(pools[0].means, to_vector(pools[0].mre),
                             to_vector(pools[0].h), to_vector(pools[0].hat));
  rep.unseen = aggregate_group(pools[1].means, to_vector(pools[1].mre),
                               to_vector(pools[1].h), to_vector(pools[1].hat));
  return rep;
}

namespace {

// spatial mesh of every axis but time, with the time column fixed at t
Matrix slice_coords(const PdeProblem& p, const std::vector<int>& sizes, double t) {
  std::vector<std::vector<double>> axes;
  long n = 1;
  for (std::size_t d = 0; d + 1 < p.bounds.size(); ++d) {
    axes.push_back(linspace(p.bounds[d].first, p.bounds[d].second, sizes[d]));
    n *= sizes[d];
  }
  Matrix m(n, p.coord_dim);
  for (long r = 0; r < n; ++r) {
    long rem = r;
    for (int d = static_cast<int>(axes.size()) - 1; d >= 0; --d) {
      const auto& a = axes[static_cast<std::size_t>(d)];
      m(r, d) = a[static_cast<std::size_t>(rem % static_cast<long>(a.size()))];
      rem /= static_cast<long>(a.size());
    }
    m(r, p.coord_dim - 1) = t;
  }
  return m;
}

// truth signal on one time slice; coords rows follow slice_coords order
Vector slice_truth(const PdeProblem& p, const Condition& c, const Matrix& coords,
                   double t) {
  const long n = coords.rows();
  Vector h(n);
  if (p.name == "advection" || p.name == "toy_const") {
    double beta = p.name == "toy_const" ? 0.0 : p.beta;
    for (long i = 0; i < n; ++i)
      h(i) = advection_exact(coords(i, 0), t, [&c](double s) { return c.ic(s); },
                             beta);
    return h;
  }
  if (p.name == "burgers") {
    if (t == 0) {
      for (long i = 0; i < n; ++i) h(i) = c.ic(coords(i, 0));
      return h;
    }
    // oracle over {x} x {0, t}: the second time row is exactly the slice
    GridSpec g{{static_cast<int>(n), 2}, {p.bounds[0], {0.0, t}}};
    ReferenceField f = oracle_field(p, c, g);
    for (long i = 0; i < n; ++i) h(i) = f.values(2 * i + 1, 0);
    return h;
  }
  if (p.name == "beltrami") {
    for (long i = 0; i < n; ++i) {
      double u, v, q;
      beltrami_solution(coords(i, 0), coords(i, 1), t, c.value, &u, &v, &q);
      h(i) = std::sqrt(u * u + v * v);
    }
    return h;
  }
  throw std::invalid_argument("sweep: no time slices for " + p.name);
}

}  // namespace

std::vector<SweepPoint> sweep(const ParameterStore& P, const TrainConfig& cfg,
                              const std::string& axis,
                              const std::vector<double>& values,
                              const std::vector<int>& sizes) {
  PdeProblem p = train_problem(cfg);
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  std::vector<SweepPoint> out;

  if (axis == "time") {
    if (p.steady)
      throw std::invalid_argument("sweep: time axis on a steady problem");
    if (static_cast<int>(sizes.size()) != p.coord_dim - 1)
      throw std::invalid_argument("sweep: time axis expects spatial sizes only");
    for (int s : sizes)
      if (s < 2)
        throw std::invalid_argument("sweep: each axis needs at least 2 nodes");
    for (double v : values)
      if (!(v >= 0) || !std::isfinite(v))
        throw std::invalid_argument("sweep: time values must be finite and >= 0");
    ConditionSet set = make_conditions(p, cfg.family);
    const std::vector<Condition>& conds =
        set.unseen.empty() ? set.seen : set.unseen;
    if (conds.empty()) throw std::invalid_argument("sweep: no conditions");
    for (double t : values) {
      Matrix coords = slice_coords(p, sizes, t);
      double acc = 0;
      for (const Condition& c : conds) {
        Vector h = slice_truth(p, c, coords, t);
        Vector hat = signal_of(predict_at(P, cfg, c, coords), p.field_count);
        acc += modified_relative_error(h, hat).mean;
      }
      out.push_back({t, acc / static_cast<double>(conds.size())});
    }
    return out;
  }

  if (axis == "re" || axis == "lid") {
    const bool re_axis = axis == "re";
    if (re_axis && p.name != "kovasznay" && p.name != "beltrami")
      throw std::invalid_argument("sweep: re axis needs kovasznay or beltrami");
    if (!re_axis && p.name != "lid_cavity")
      throw std::invalid_argument("sweep: lid axis needs lid_cavity");
    for (double v : values) {
      Condition c;
      c.problem = p.name;
      c.seen = false;
      c.value = v;
      ReferenceField ref = oracle_field(p, c, {sizes, {}});
      Vector h = signal_of(ref.values, p.field_count);
      Vector hat =
          signal_of(predict_at(P, cfg, c, field_coords(ref)), p.field_count);
      out.push_back({v, modified_relative_error(h, hat).mean});
    }
    return out;
  }

  throw std::invalid_argument("sweep: unknown axis " + axis);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) {
  return v ? num(*v) : std::string();
}

void metric_row(std::ostream& os, const std::string& group,
                const std::string& cond, const std::string& value, long points,
                double mre_mean, double mre_std, const StandardMetrics& s) {
  os << group << ',' << cond << ',' << value << ',' << points << ','
     << num(mre_mean) << ',' << num(mre_std) << ',' << num(s.rmse) << ','
     << num(s.mae) << ',' << opt_num(s.nrmse) << ',' << opt_num(s.mape) << '\n';
}

}  // namespace

void write_metric_csv(const MetricReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "# problem=" << r.problem << " field=" << r.field
     << " note=std-over-pooled-points\n";
  os << "group,condition,value,points,mre_mean,mre_std,rmse,mae,nrmse,mape\n";
  for (const ConditionMetrics& c : r.conditions)
    metric_row(os, c.seen ? "seen" : "unseen", std::to_string(c.condition_index),
               num(c.value), c.points, c.mre_mean, c.mre_std, c.standard);
  if (r.seen.conditions > 0)
    metric_row(os, "seen", "all", "", r.seen.points, r.seen.mre_mean,
               r.seen.mre_std, r.seen.standard);
  if (r.unseen.conditions > 0)
    metric_row(os, "unseen", "all", "", r.unseen.points, r.unseen.mre_mean,
               r.unseen.mre_std, r.unseen.standard);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_sweep_csv(const std::vector<SweepPoint>& curve,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "value,mre_mean\n";
  for (const SweepPoint& p : curve)
    os << num(p.value) << ',' << num(p.mre_mean) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string format_metric_table(const MetricReport& r) {
  std::string out = "problem: " + r.problem + "   field: " + r.field +
                    "   (std over pooled points)\n";
  char line[200];
  std::snprintf(line, sizeof line, "%-7s %5s %10s %9s %11s %11s %11s %11s %11s %11s\n",
                "group", "cond", "value", "points", "mre_mean", "mre_std",
                "rmse", "mae", "nrmse", "mape");
  out += line;
  auto fmt_opt = [](const std::optional<double>& v) {
    char buf[16];
    if (v) std::snprintf(buf, sizeof buf, "%11.4e", *v);
    else std::snprintf(buf, sizeof buf, "%11s", "--");
    return std::string(buf);
  };
  auto row = [&](const std::string& group, const std::string& cond,
                 const std::string& value, long points, double mean, double std_,
                 const StandardMetrics& s) {
    std::snprintf(line, sizeof line,
                  "%-7s %5s %10s %9ld %11.4e %11.4e %11.4e %11.4e %s %s\n",
                  group.c_str(), cond.c_str(), value.c_str(), points, mean, std_,
                  s.rmse, s.mae, fmt_opt(s.nrmse).c_str(), fmt_opt(s.mape).c_str());
    out += line;
  };
  char vbuf[24];
  for (const ConditionMetrics& c : r.conditions) {
    std::snprintf(vbuf, sizeof vbuf, "%.6g", c.value);
    row(c.seen ? "seen" : "unseen", std::to_string(c.condition_index), vbuf,
        c.points, c.mre_mean, c.mre_std, c.standard);
  }
  if (r.seen.conditions > 0)
    row("seen", "all", "", r.seen.points, r.seen.mre_mean, r.seen.mre_std,
        r.seen.standard);
  if (r.unseen.conditions > 0)
    row("unseen", "all", "", r.unseen.points, r.unseen.mre_mean,
        r.unseen.mre_std, r.unseen.standard);
  return out;
}

}  // namespace pinto
