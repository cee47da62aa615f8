#include <doctest.h>
#include <pinto/metrics.hpp>
#include <pinto/rng.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace pinto;

namespace {

ArchitectureConfig tiny_arch(int coord_dim, int value_dim, int fields, Act act) {
  ArchitectureConfig a;
  a.query_dim = coord_dim;
  a.boundary_dim = coord_dim;
  a.value_dim = value_dim;
  a.fields = fields;
  a.embed = 4;
  a.heads = 1;
  a.key_dim = 4;
  a.encoder_layers = 1;
  a.cau_count = 1;
  a.cau_dense_layers = 1;
  a.head_hidden_layers = 1;
  a.activation = act;
  return a;
}

// all-zero weights turn the network into a per-field constant equal to the
// output bias, which makes every metric computable by hand
ParameterStore constant_model(const TrainConfig& cfg,
                              const std::vector<double>& biases) {
  ParameterStore P = init_model_params(cfg);
  for (const auto& n : P.names()) P.value(n).setZero();
  for (std::size_t f = 0; f < biases.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "head%02zu/out/b", f);
    P.value(name)(0, 0) = biases[f];
  }
  return P;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.problem = "toy_const";
  cfg.model.arch = tiny_arch(2, 1, 1, Act::Tanh);
  cfg.family.seed = 5;
  cfg.family.seen_count = 2;
  cfg.family.unseen_count = 1;
  cfg.L = 4;
  cfg.sample_seed = 12;
  return cfg;
}

std::string temp_file(const char* leaf) {
  return (std::filesystem::temp_directory_path() / leaf).string();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

double mre_of(double h, double hat) {
  return std::abs(h - hat) / (1.0 + std::abs(h));
}

}  // namespace

TEST_CASE("standard metrics worked examples") {
  Vector h(2), hat(2);
  h << 3.0, 4.0;
  hat << 0.0, 0.0;
  StandardMetrics m = standard_metrics(h, hat);
  CHECK(m.rmse == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(m.mae == doctest::Approx(3.5).epsilon(1e-15));
  REQUIRE(m.nrmse.has_value());
  REQUIRE(m.mape.has_value());
  CHECK(*m.nrmse == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*m.mape == doctest::Approx(1.0).epsilon(1e-15));

  StandardMetrics z = standard_metrics(h, h);
  CHECK(z.rmse == 0.0);
  CHECK(z.mae == 0.0);
  CHECK(*z.nrmse == 0.0);
  CHECK(*z.mape == 0.0);

  Vector short_v(1);
  short_v << 1.0;
  auto mismatched = [&] { standard_metrics(h, short_v); };
  CHECK_THROWS_AS(mismatched(), std::invalid_argument);
  Vector empty(0);
  auto empty_call = [&] { standard_metrics(empty, empty); };
  CHECK_THROWS_AS(empty_call(), std::invalid_argument);
}

TEST_CASE("modified relative error worked examples") {
  Vector h(2), hat(2);
  h << 1.0, 0.0;
  hat << 1.1, 0.3;
  ModifiedRelError r = modified_relative_error(h, hat);
  CHECK(r.pointwise(0) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(r.pointwise(1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(r.mean == doctest::Approx(0.175).epsilon(1e-14));
  CHECK(r.stddev == doctest::Approx(0.125).epsilon(1e-14));

  ModifiedRelError zero = modified_relative_error(h, h);
  CHECK(zero.mean == 0.0);
  CHECK(zero.stddev == 0.0);
}

TEST_CASE("zero normalizers are flagged, never nan") {
  Vector h = Vector::Zero(3);
  Vector hat(3);
  hat << 0.1, -0.2, 0.3;
  StandardMetrics m = standard_metrics(h, hat);
  CHECK(!m.nrmse.has_value());
  CHECK(!m.mape.has_value());
  CHECK(std::isfinite(m.rmse));
  CHECK(m.mae == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("metric functions agree with direct transcription") {
  Rng rng(42);
  const int n = 1000;
  Vector h(n), hat(n);
  for (int i = 0; i < n; ++i) {
    h(i) = rng.uniform(-3.0, 3.0);
    hat(i) = h(i) + rng.uniform(-1.0, 1.0);
  }
  double se = 0, ae = 0, sh = 0, ah = 0;
  for (int i = 0; i < n; ++i) {
    double d = h(i) - hat(i);
    se += d * d;
    ae += std::abs(d);
    sh += h(i) * h(i);
    ah += std::abs(h(i));
  }
  StandardMetrics m = standard_metrics(h, hat);
  CHECK(m.rmse == doctest::Approx(std::sqrt(se / n)).epsilon(1e-14));
  CHECK(m.mae == doctest::Approx(ae / n).epsilon(1e-14));
  CHECK(*m.nrmse ==
        doctest::Approx(std::sqrt(se / n) / std::sqrt(sh / n)).epsilon(1e-14));
  CHECK(*m.mape == doctest::Approx((ae / n) / (ah / n)).epsilon(1e-14));

  double rs = 0;
  for (int i = 0; i < n; ++i) rs += mre_of(h(i), hat(i));
  double rmean = rs / n;
  double rvar = 0;
  for (int i = 0; i < n; ++i) {
    double d = mre_of(h(i), hat(i)) - rmean;
    rvar += d * d;
  }
  ModifiedRelError r = modified_relative_error(h, hat);
  CHECK(r.mean == doctest::Approx(rmean).epsilon(1e-14));
  CHECK(r.stddev == doctest::Approx(std::sqrt(rvar / n)).epsilon(1e-14));
  for (int i = 0; i < n; i += 97)
    CHECK(r.pointwise(i) == doctest::Approx(mre_of(h(i), hat(i))).epsilon(1e-14));
}

TEST_CASE("group aggregation: equal condition weights, order independence") {
  std::vector<double> means{0.1, 0.2, 0.6};
  Vector mre(5), h(5), hat(5);
  mre << 0.1, 0.2, 0.3, 0.4, 0.5;
  h << 1.0, 2.0, 3.0, 4.0, 5.0;
  hat << 1.1, 1.8, 3.3, 3.6, 5.5;
  GroupMetrics g = aggregate_group(means, mre, h, hat);
  CHECK(g.conditions == 3);
  CHECK(g.points == 5);
  CHECK(g.mre_mean == doctest::Approx(0.3).epsilon(1e-15));
  double pm = mre.mean();
  CHECK(g.mre_std ==
        doctest::Approx(std::sqrt((mre.array() - pm).square().mean())).epsilon(1e-14));

  std::vector<double> means2{0.6, 0.1, 0.2};
  std::vector<int> perm{4, 2, 0, 1, 3};
  Vector mre2(5), h2(5), hat2(5);
  for (int i = 0; i < 5; ++i) {
    mre2(i) = mre(perm[static_cast<std::size_t>(i)]);
    h2(i) = h(perm[static_cast<std::size_t>(i)]);
    hat2(i) = hat(perm[static_cast<std::size_t>(i)]);
  }
  GroupMetrics g2 = aggregate_group(means2, mre2, h2, hat2);
  CHECK(g2.mre_mean == doctest::Approx(g.mre_mean).epsilon(1e-14));
  CHECK(g2.mre_std == doctest::Approx(g.mre_std).epsilon(1e-14));
  CHECK(g2.standard.rmse == doctest::Approx(g.standard.rmse).epsilon(1e-14));
  CHECK(g2.standard.mae == doctest::Approx(g.standard.mae).epsilon(1e-14));

  GroupMetrics none = aggregate_group({}, Vector(0), Vector(0), Vector(0));
  CHECK(none.conditions == 0);
  CHECK(none.mre_mean == 0.0);

  Vector bad(4);
  bad.setZero();
  auto unequal = [&] { aggregate_group(means, bad, h, hat); };
  CHECK_THROWS_AS(unequal(), std::invalid_argument);
}

TEST_CASE("constant model versus toy oracle: every number by hand") {
  TrainConfig cfg = toy_config();
  const double bias = 0.25;
  ParameterStore P = constant_model(cfg, {bias});
  ConditionSet set = make_conditions(train_problem(cfg), cfg.family);
  REQUIRE(set.seen.size() == 2);
  REQUIRE(set.unseen.size() == 1);

  MetricReport rep = evaluate_model(P, cfg, {9, 5});
  CHECK(rep.problem == "toy_const");
  CHECK(rep.field == "u");
  REQUIRE(rep.conditions.size() == 3);

  std::vector<double> errs;
  for (int k = 0; k < 3; ++k) {
    const ConditionMetrics& cm = rep.conditions[static_cast<std::size_t>(k)];
    double v = k < 2 ? set.seen[static_cast<std::size_t>(k)].value
                     : set.unseen[0].value;
    CHECK(cm.seen == (k < 2));
    CHECK(cm.points == 45);
    CHECK(cm.value == v);
    double d = std::abs(v - bias);
    errs.push_back(mre_of(v, bias));
    CHECK(cm.mre_mean == doctest::Approx(mre_of(v, bias)).epsilon(1e-14));
    CHECK(cm.mre_std == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(cm.standard.rmse == doctest::Approx(d).epsilon(1e-14));
    CHECK(cm.standard.mae == doctest::Approx(d).epsilon(1e-14));
    REQUIRE(cm.standard.nrmse.has_value());
    CHECK(*cm.standard.nrmse == doctest::Approx(d / std::abs(v)).epsilon(1e-14));
    CHECK(*cm.standard.mape == doctest::Approx(d / std::abs(v)).epsilon(1e-14));
  }

  CHECK(rep.seen.conditions == 2);
  CHECK(rep.seen.points == 90);
  CHECK(rep.seen.mre_mean ==
        doctest::Approx(0.5 * (errs[0] + errs[1])).epsilon(1e-14));
  // two constant per-condition errors pool to std = half their gap
  CHECK(rep.seen.mre_std ==
        doctest::Approx(0.5 * std::abs(errs[0] - errs[1])).epsilon(1e-13));
  CHECK(rep.unseen.conditions == 1);
  CHECK(rep.unseen.mre_mean == doctest::Approx(errs[2]).epsilon(1e-14));
  CHECK(rep.unseen.mre_std == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("predict_field mirrors the oracle grid") {
  TrainConfig cfg = toy_config();
  ParameterStore P = constant_model(cfg, {0.25});
  PdeProblem p = train_problem(cfg);
  Condition c = make_conditions(p, cfg.family).seen[0];

  ReferenceField pf = predict_field(P, cfg, c, {9, 5});
  ReferenceField of = oracle_field(p, c, {{9, 5}, {}});
  CHECK(pf.provenance == "model");
  CHECK(pf.axis_names == of.axis_names);
  REQUIRE(pf.axes.size() == of.axes.size());
  for (std::size_t d = 0; d < pf.axes.size(); ++d) {
    REQUIRE(pf.axes[d].size() == of.axes[d].size());
    for (std::size_t i = 0; i < pf.axes[d].size(); ++i)
      CHECK(pf.axes[d][i] == of.axes[d][i]);
  }
  CHECK(pf.field_names == of.field_names);
  CHECK((pf.values.array() - 0.25).abs().maxCoeff() < 1e-14);
  pf.validate();

  // chunked forward stitches rows across the 8192 boundary
  Matrix big(9000, 2);
  Rng rng(3);
  for (long i = 0; i < big.rows(); ++i) {
    big(i, 0) = rng.uniform(0.0, 1.0);
    big(i, 1) = rng.uniform(0.0, 1.0);
  }
  Matrix pred = predict_at(P, cfg, c, big);
  CHECK(pred.rows() == 9000);
  CHECK((pred.array() - 0.25).abs().maxCoeff() < 1e-14);

  Matrix wrong(4, 3);
  wrong.setZero();
  auto bad_dim = [&] { predict_at(P, cfg, c, wrong); };
  CHECK_THROWS_AS(bad_dim(), std::invalid_argument);
}

TEST_CASE("navier-stokes reports compare velocity magnitude") {
  TrainConfig cfg;
  cfg.problem = "kovasznay";
  cfg.model.arch = tiny_arch(2, 3, 3, Act::Tanh);
  cfg.family.seen_values = {20.0};
  cfg.L = 6;
  cfg.sample_seed = 7;
  const double bu = 0.3, bv = -0.4;
  ParameterStore P = constant_model(cfg, {bu, bv, 0.1});

  const int nx = 6, ny = 7;
  MetricReport rep = evaluate_model(P, cfg, {nx, ny});
  CHECK(rep.field == "|V|");
  REQUIRE(rep.conditions.size() == 1);
  CHECK(rep.conditions[0].points == nx * ny);

  PdeProblem p = train_problem(cfg);
  const double hat = std::hypot(bu, bv);
  double acc = 0, se = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double x = p.bounds[0].first +
                 (p.bounds[0].second - p.bounds[0].first) * i / (nx - 1.0);
      double y = p.bounds[1].first +
                 (p.bounds[1].second - p.bounds[1].first) * j / (ny - 1.0);
      double u, v, q;
      kovasznay_solution(x, y, 20.0, &u, &v, &q);
      double h = std::sqrt(u * u + v * v);
      acc += mre_of(h, hat);
      se += (h - hat) * (h - hat);
    }
  CHECK(rep.conditions[0].mre_mean ==
        doctest::Approx(acc / (nx * ny)).epsilon(1e-13));
  CHECK(rep.conditions[0].standard.rmse ==
        doctest::Approx(std::sqrt(se / (nx * ny))).epsilon(1e-13));
  CHECK(rep.seen.mre_mean == doctest::Approx(acc / (nx * ny)).epsilon(1e-13));
}

TEST_CASE("lid cavity evaluation runs on the two-field oracle") {
  TrainConfig cfg;
  cfg.problem = "lid_cavity";
  cfg.model.arch = tiny_arch(2, 1, 3, Act::Tanh);
  cfg.family.seen_values = {1.0};
  cfg.L = 6;
  cfg.sample_seed = 7;
  ParameterStore P = constant_model(cfg, {0.0, 0.0, 0.0});

  MetricReport rep = evaluate_model(P, cfg, {17, 17});
  CHECK(rep.field == "|V|");
  REQUIRE(rep.conditions.size() == 1);
  CHECK(rep.conditions[0].points == 289);

  // zero model: the error is a pure function of the oracle magnitudes
  PdeProblem p = train_problem(cfg);
  ReferenceField ref = oracle_field(p, make_conditions(p, cfg.family).seen[0], {{17, 17}, {}});
  double acc = 0;
  for (long r = 0; r < ref.values.rows(); ++r) {
    double h = std::hypot(ref.values(r, 0), ref.values(r, 1));
    acc += mre_of(h, 0.0);
  }
  CHECK(rep.conditions[0].mre_mean ==
        doctest::Approx(acc / static_cast<double>(ref.values.rows())).epsilon(1e-13));
}

TEST_CASE("time sweep: slice truth and condition averaging") {
  TrainConfig cfg;
  cfg.problem = "advection";
  cfg.model.arch = tiny_arch(2, 1, 1, Act::Tanh);
  cfg.family.seed = 9;
  cfg.family.seen_count = 2;
  cfg.family.unseen_count = 1;
  cfg.L = 4;
  cfg.sample_seed = 3;
  const double bias = 0.25;
  ParameterStore P = constant_model(cfg, {bias});
  PdeProblem p = train_problem(cfg);
  Condition c = make_conditions(p, cfg.family).unseen[0];

  const int nx = 33;
  std::vector<double> times{0.0, 0.6};
  auto curve = sweep(P, cfg, "time", times, {nx});
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].value == 0.0);
  CHECK(curve[1].value == 0.6);

  for (std::size_t k = 0; k < times.size(); ++k) {
    double acc = 0;
    for (int i = 0; i < nx; ++i) {
      double x = i / (nx - 1.0);
      double h = advection_exact(x, times[k], [&c](double s) { return c.ic(s); },
                                 p.beta);
      acc += mre_of(h, bias);
    }
    CHECK(curve[k].mre_mean == doctest::Approx(acc / nx).epsilon(1e-13));
  }
}

TEST_CASE("time sweep on burgers hits exact solver slices") {
  TrainConfig cfg;
  cfg.problem = "burgers";
  cfg.model.arch = tiny_arch(2, 1, 1, Act::Tanh);
  cfg.family.seed = 21;
  cfg.family.seen_count = 1;
  cfg.L = 4;
  cfg.sample_seed = 6;
  const double bias = 0.25;
  ParameterStore P = constant_model(cfg, {bias});
  PdeProblem p = train_problem(cfg);
  Condition c = make_conditions(p, cfg.family).seen[0];

  const int nx = 17;
  const double t1 = 0.04;
  auto curve = sweep(P, cfg, "time", {0.0, t1}, {nx});
  REQUIRE(curve.size() == 2);

  double acc0 = 0;
  for (int i = 0; i < nx; ++i) acc0 += mre_of(c.ic(i / (nx - 1.0)), bias);
  CHECK(curve[0].mre_mean == doctest::Approx(acc0 / nx).epsilon(1e-13));

  ReferenceField slice = oracle_field(p, c, {{nx, 2}, {p.bounds[0], {0.0, t1}}});
  double acc1 = 0;
  for (int i = 0; i < nx; ++i) acc1 += mre_of(slice.values(2 * i + 1, 0), bias);
  CHECK(curve[1].mre_mean == doctest::Approx(acc1 / nx).epsilon(1e-13));
}

TEST_CASE("reynolds sweep builds one condition per value") {
  TrainConfig cfg;
  cfg.problem = "kovasznay";
  cfg.model.arch = tiny_arch(2, 3, 3, Act::Tanh);
  cfg.family.seen_values = {20.0};
  cfg.L = 6;
  cfg.sample_seed = 7;
  ParameterStore P = constant_model(cfg, {0.0, 0.0, 0.0});

  const int nx = 5, ny = 6;
  std::vector<double> res{20.0, 40.0};
  auto curve = sweep(P, cfg, "re", res, {nx, ny});
  REQUIRE(curve.size() == 2);
  PdeProblem p = train_problem(cfg);
  for (std::size_t k = 0; k < res.size(); ++k) {
    CHECK(curve[k].value == res[k]);
    double acc = 0;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double x = p.bounds[0].first +
                   (p.bounds[0].second - p.bounds[0].first) * i / (nx - 1.0);
        double y = p.bounds[1].first +
                   (p.bounds[1].second - p.bounds[1].first) * j / (ny - 1.0);
        double u, v, q;
        kovasznay_solution(x, y, res[k], &u, &v, &q);
        acc += mre_of(std::sqrt(u * u + v * v), 0.0);
      }
    CHECK(curve[k].mre_mean == doctest::Approx(acc / (nx * ny)).epsilon(1e-13));
  }
}

TEST_CASE("sweep rejects mismatched axes") {
  TrainConfig adv;
  adv.problem = "advection";
  adv.model.arch = tiny_arch(2, 1, 1, Act::Tanh);
  adv.family.seen_count = 1;
  adv.L = 4;
  ParameterStore P = constant_model(adv, {0.0});

  TrainConfig kov;
  kov.problem = "kovasznay";
  kov.model.arch = tiny_arch(2, 3, 3, Act::Tanh);
  kov.family.seen_values = {20.0};
  kov.L = 4;
  ParameterStore Q = constant_model(kov, {0.0, 0.0, 0.0});

  std::vector<double> one{1.0};
  std::vector<double> neg{-1.0};
  std::vector<int> g1{8};
  std::vector<int> g2{8, 8};
  auto unknown_axis = [&] { sweep(P, adv, "banana", one, g1); };
  auto steady_time = [&] { sweep(Q, kov, "time", one, g2); };
  auto re_on_advection = [&] { sweep(P, adv, "re", one, g2); };
  auto wrong_rank = [&] { sweep(P, adv, "time", one, g2); };
  auto negative_time = [&] { sweep(P, adv, "time", neg, g1); };
  auto no_values = [&] { sweep(P, adv, "time", {}, g1); };
  CHECK_THROWS_AS(unknown_axis(), std::invalid_argument);
  CHECK_THROWS_AS(steady_time(), std::invalid_argument);
  CHECK_THROWS_AS(re_on_advection(), std::invalid_argument);
  CHECK_THROWS_AS(wrong_rank(), std::invalid_argument);
  CHECK_THROWS_AS(negative_time(), std::invalid_argument);
  CHECK_THROWS_AS(no_values(), std::invalid_argument);
}

TEST_CASE("metric csv and table emitters") {
  TrainConfig cfg = toy_config();
  ParameterStore P = constant_model(cfg, {0.25});
  MetricReport rep = evaluate_model(P, cfg, {9, 5});

  std::string path = temp_file("pinto_metrics.csv");
  write_metric_csv(rep, path);
  auto lines = read_lines(path);
  REQUIRE(lines.size() == 2 + 3 + 2);  // header x2, conditions, aggregates
  CHECK(lines[0].find("note=std-over-pooled-points") != std::string::npos);
  CHECK(lines[1] == "group,condition,value,points,mre_mean,mre_std,rmse,mae,nrmse,mape");
  CHECK(lines[2].rfind("seen,0,", 0) == 0);
  CHECK(lines[5].rfind("seen,all,,90,", 0) == 0);
  CHECK(lines[6].rfind("unseen,all,,45,", 0) == 0);
  // %.17g round trip on the first condition's mre_mean
  std::stringstream ss(lines[2]);
  std::string cell;
  for (int i = 0; i < 5; ++i) std::getline(ss, cell, ',');
  CHECK(std::strtod(cell.c_str(), nullptr) == rep.conditions[0].mre_mean);

  std::string table = format_metric_table(rep);
  CHECK(table.find("std over pooled points") != std::string::npos);
  CHECK(table.find("toy_const") != std::string::npos);
  CHECK(table.find("seen") != std::string::npos);
  CHECK(table.find("unseen") != std::string::npos);
  CHECK(table.find("all") != std::string::npos);

  MetricReport manual;
  manual.problem = "x";
  manual.field = "u";
  ConditionMetrics cm;
  cm.points = 3;
  cm.standard.rmse = 0.5;
  cm.standard.mae = 0.5;  // nrmse/mape left undefined
  manual.conditions.push_back(cm);
  std::string path2 = temp_file("pinto_metrics_undef.csv");
  write_metric_csv(manual, path2);
  auto lines2 = read_lines(path2);
  REQUIRE(lines2.size() == 3);
  CHECK(lines2[2].substr(lines2[2].size() - 2) == ",,");
  CHECK(format_metric_table(manual).find("--") != std::string::npos);

  std::vector<SweepPoint> curve{{0.5, 0.125}, {1.0, 0.25}};
  std::string path3 = temp_file("pinto_sweep.csv");
  write_sweep_csv(curve, path3);
  auto lines3 = read_lines(path3);
  REQUIRE(lines3.size() == 3);
  CHECK(lines3[0] == "value,mre_mean");
  CHECK(lines3[1] == "0.5,0.125");
  CHECK(lines3[2] == "1,0.25");
}
