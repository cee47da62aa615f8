#include <doctest.h>
#include <pinto/training.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
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

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.problem = "toy_const";
  cfg.model.arch = tiny_arch(2, 1, 1, Act::Tanh);
  cfg.family.seed = 5;
  cfg.family.seen_count = 1;
  cfg.n_c = 16;
  cfg.n_ib = 8;
  cfg.L = 4;
  cfg.epochs = 50;
  cfg.batches = 2;
  cfg.schedule.base = 1e-2;
  cfg.init_seed = 11;
  cfg.sample_seed = 12;
  return cfg;
}

std::string temp_dir(const char* leaf) {
  auto d = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d.string();
}

bool params_equal(const ParameterStore& a, const ParameterStore& b) {
  if (a.names() != b.names()) return false;
  for (const auto& n : a.names())
    if (a.value(n) != b.value(n)) return false;
  return true;
}

}  // namespace

TEST_CASE("adam first step and zero gradient") {
  ParameterStore P;
  P.add("w", Matrix::Constant(1, 1, 3.0));
  auto st = make_optimizer(P, {});
  P.grad("w")(0, 0) = 2.0;
  optimizer_step(P, st, 1e-3);
  // m-hat = g, v-hat = g^2, so the step is -lr * g / (|g| + eps)
  CHECK(P.value("w")(0, 0) ==
        doctest::Approx(3.0 - 1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(st.step == 1);

  ParameterStore Q;
  Q.add("w", Matrix::Constant(1, 1, 3.0));
  auto st2 = make_optimizer(Q, {});
  for (int i = 0; i < 5; ++i) optimizer_step(Q, st2, 1e-3);
  CHECK(Q.value("w")(0, 0) == 3.0);
}

TEST_CASE("adam matches a hand-rolled ten-step recurrence") {
  const double lr = 7e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ParameterStore P;
  P.add("w", Matrix::Constant(1, 1, 0.5));
  auto st = make_optimizer(P, {});

  double w = 0.5, m = 0, v = 0;
  for (int t = 1; t <= 10; ++t) {
    double g = std::sin(static_cast<double>(t)) + 0.2 * t;
    P.grad("w")(0, 0) = g;
    optimizer_step(P, st, lr);

    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mh = m / (1 - std::pow(b1, t));
    double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(P.value("w")(0, 0) == doctest::Approx(w).epsilon(1e-14));
  }
}

TEST_CASE("adamw applies decoupled weight decay") {
  OptimizerConfig cfg;
  cfg.kind = OptKind::AdamW;
  cfg.weight_decay = 0.1;
  const double lr = 5e-3;
  ParameterStore P;
  P.add("w", Matrix::Constant(1, 1, 2.0));
  auto st = make_optimizer(P, cfg);

  double w = 2.0, m = 0, v = 0;
  for (int t = 1; t <= 10; ++t) {
    double g = std::cos(0.3 * t);
    P.grad("w")(0, 0) = g;
    optimizer_step(P, st, lr);

    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1 - std::pow(0.9, t));
    double vh = v / (1 - std::pow(0.999, t));
    w *= 1.0 - lr * cfg.weight_decay;
    w -= lr * mh / (std::sqrt(vh) + 1e-8);
    CHECK(P.value("w")(0, 0) == doctest::Approx(w).epsilon(1e-14));
  }

  // with decay zero, adamw reduces to adam
  OptimizerConfig plain;
  plain.kind = OptKind::AdamW;
  ParameterStore A, B;
  A.add("w", Matrix::Constant(1, 1, 1.0));
  B.add("w", Matrix::Constant(1, 1, 1.0));
  auto sa = make_optimizer(A, plain);
  auto sb = make_optimizer(B, {});
  A.grad("w")(0, 0) = 0.7;
  B.grad("w")(0, 0) = 0.7;
  optimizer_step(A, sa, 1e-3);
  optimizer_step(B, sb, 1e-3);
  CHECK(A.value("w")(0, 0) == B.value("w")(0, 0));
}

TEST_CASE("schedules match their closed forms") {
  Schedule c;
  c.base = 2.5e-4;
  CHECK(c.lr(0) == 2.5e-4);
  CHECK(c.lr(123456) == 2.5e-4);

  Schedule e;
  e.kind = Schedule::Kind::Exponential;
  e.base = 1e-3;
  e.rate = 0.9;
  e.steps = 10000;
  CHECK(e.lr(0) == 1e-3);
  CHECK(e.lr(10000) == doctest::Approx(1e-3 * 0.9).epsilon(1e-15));
  CHECK(e.lr(5000) == doctest::Approx(1e-3 * std::pow(0.9, 0.5)).epsilon(1e-15));
  CHECK(e.lr(25000) == doctest::Approx(1e-3 * std::pow(0.9, 2.5)).epsilon(1e-15));

  Schedule p;
  p.kind = Schedule::Kind::Piecewise;
  p.boundaries = {5000, 10000};
  p.values = {1e-3, 1e-4, 1e-5};
  p.validate();
  CHECK(p.lr(0) == 1e-3);
  CHECK(p.lr(4999) == 1e-3);
  CHECK(p.lr(5000) == 1e-4);  // left-closed: switches at the boundary step
  CHECK(p.lr(9999) == 1e-4);
  CHECK(p.lr(10000) == 1e-5);
  CHECK(p.lr(1000000) == 1e-5);

  auto zero_base = [] {
    Schedule bad;
    bad.base = 0.0;
    bad.validate();
  };
  auto unsorted = [] {
    Schedule bad;
    bad.kind = Schedule::Kind::Piecewise;
    bad.boundaries = {10, 5};
    bad.values = {1e-3, 1e-4, 1e-5};
    bad.validate();
  };
  auto zero_rate = [] {
    Schedule bad;
    bad.kind = Schedule::Kind::Piecewise;
    bad.boundaries = {10};
    bad.values = {1e-3, 0.0};
    bad.validate();
  };
  CHECK_THROWS_AS(zero_base(), std::invalid_argument);
  CHECK_THROWS_AS(unsorted(), std::invalid_argument);
  CHECK_THROWS_AS(zero_rate(), std::invalid_argument);
}

TEST_CASE("loss breakdown sums to the total and respects the weights") {
  TrainConfig cfg = toy_config();
  cfg.family.seen_count = 2;
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);

  LossWeights w{0.7, 2.5};
  auto br = physics_loss(P, p, cfg.model, conds, w);
  REQUIRE(br.physics_per_cond.size() == 2);
  double sum = 0;
  for (std::size_t k = 0; k < 2; ++k)
    sum += br.physics_per_cond[k] + br.boundary_per_cond[k];
  CHECK(br.total == doctest::Approx(sum).epsilon(1e-12));
  CHECK(br.physics ==
        doctest::Approx(br.physics_per_cond[0] + br.physics_per_cond[1])
            .epsilon(1e-12));

  // lambda1 = 0 leaves the pure boundary term
  auto bonly = physics_loss(P, p, cfg.model, conds, {0.0, 2.5});
  CHECK(bonly.physics == 0.0);
  CHECK(bonly.total == doctest::Approx(bonly.boundary).epsilon(1e-12));
  CHECK(bonly.boundary == doctest::Approx(br.boundary).epsilon(1e-12));

  // weights scale their terms linearly
  auto unit = physics_loss(P, p, cfg.model, conds, {1.0, 1.0});
  CHECK(br.physics == doctest::Approx(0.7 * unit.physics).epsilon(1e-12));
  CHECK(br.boundary == doctest::Approx(2.5 * unit.boundary).epsilon(1e-12));
}

TEST_CASE("physics loss matches a hand-assembled evaluation") {
  TrainConfig cfg = toy_config();
  cfg.problem = "advection";
  cfg.family.seen_count = 2;
  cfg.n_c = 3;
  cfg.n_ib = 5;
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);

  // model value at one point under one condition
  auto value_at = [&](const ConditionData& cd, double x, double t) {
    EvalEngine e(P);
    Matrix q(1, 2);
    q << x, t;
    auto out = model_forward(e, cfg.model, e.constant(q), cd.seq);
    return e.peek(out[0]).value()(0, 0);
  };

  LossWeights w{1.3, 0.8};
  double hand = 0;
  const double h = 1e-5;
  for (const auto& cd : conds) {
    double phys = 0;
    for (long i = 0; i < cd.colloc.interior.rows(); ++i) {
      double x = cd.colloc.interior(i, 0), t = cd.colloc.interior(i, 1);
      double ut = (value_at(cd, x, t + h) - value_at(cd, x, t - h)) / (2 * h);
      double ux = (value_at(cd, x + h, t) - value_at(cd, x - h, t)) / (2 * h);
      double r = ut + p.beta * ux;
      phys += r * r;
    }
    phys /= static_cast<double>(cd.colloc.interior.rows());
    double n_ib = static_cast<double>(cd.colloc.targets.size() + cd.colloc.pairs.size());
    double bnd = 0;
    for (const auto& t : cd.colloc.targets) {
      double d = value_at(cd, t.x[0], t.x[1]) - t.b[0];
      bnd += t.weight * d * d;
    }
    for (const auto& pr : cd.colloc.pairs) {
      double d = value_at(cd, pr.xa[0], pr.xa[1]) - value_at(cd, pr.xb[0], pr.xb[1]);
      bnd += pr.weight * d * d;
    }
    bnd /= n_ib;
    hand += w.lambda1 * phys + w.lambda2 * bnd;
  }

  auto br = physics_loss(P, p, cfg.model, conds, w);
  CHECK(br.total == doctest::Approx(hand).epsilon(1e-6));
}

TEST_CASE("exact model gives zero loss") {
  // a network whose every weight is zero and whose head bias equals the
  // condition value reproduces the constant solution exactly
  TrainConfig cfg = toy_config();
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);
  for (const auto& name : P.names()) P.value(name).setZero();
  P.value("head00/out/b")(0, 0) = conds[0].cond.value;

  auto br = physics_loss(P, p, cfg.model, conds, {1.0, 1.0});
  CHECK(br.total < 1e-30);
  CHECK(br.physics == 0.0);
  CHECK(br.boundary == 0.0);
}

TEST_CASE("physics-guided term is the reference mean squared error") {
  TrainConfig cfg = toy_config();
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);

  Rng rng(77);
  Matrix ref(cfg.n_c, 1);
  for (long i = 0; i < ref.rows(); ++i) ref(i, 0) = rng.uniform(-1.0, 1.0);
  conds[0].guided = ref;

  auto br = physics_loss(P, p, cfg.model, conds, {1.0, 0.0});
  double mse = data_loss(P, cfg.model, conds[0].seq, conds[0].colloc.interior, ref);
  CHECK(br.physics == doctest::Approx(mse).epsilon(1e-12));
  CHECK(br.total == doctest::Approx(mse).epsilon(1e-12));
}

TEST_CASE("data loss worked examples") {
  TrainConfig cfg = toy_config();
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);
  const auto& cd = conds[0];
  const Matrix& pts = cd.colloc.interior;

  EvalEngine e(P);
  auto out = model_forward(e, cfg.model, e.constant(pts), cd.seq);
  Matrix pred = e.peek(out[0]).value();

  CHECK(data_loss(P, cfg.model, cd.seq, pts, pred) == 0.0);
  Matrix off = pred.array() + 0.25;
  CHECK(data_loss(P, cfg.model, cd.seq, pts, off) ==
        doctest::Approx(0.0625).epsilon(1e-12));

  Rng rng(3);
  Matrix noisy = pred;
  double hand = 0;
  for (long i = 0; i < noisy.rows(); ++i) {
    double d = rng.uniform(-0.5, 0.5);
    noisy(i, 0) += d;
    hand += d * d;
  }
  hand /= static_cast<double>(noisy.rows());
  CHECK(data_loss(P, cfg.model, cd.seq, pts, noisy) ==
        doctest::Approx(hand).epsilon(1e-12));

  CHECK_THROWS_AS(data_loss(P, cfg.model, cd.seq, Matrix(0, 2), Matrix(0, 1)),
                  std::invalid_argument);
}

TEST_CASE("non-finite residuals raise a diagnostic with the offending point") {
  TrainConfig cfg = toy_config();
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  ParameterStore P = init_model_params(cfg);
  P.value("qpe/l00/w")(0, 0) = std::nan("");

  LossWeights w;
  CHECK_THROWS_WITH_AS(physics_loss(P, p, cfg.model, conds, w),
                       doctest::Contains("condition=0"), DivergenceError);
  try {
    physics_loss(P, p, cfg.model, conds, w);
  } catch (const DivergenceError& err) {
    CHECK(std::string(err.what()).find("point=(") != std::string::npos);
  }
}

TEST_CASE("tape gradient of the physics loss matches finite differences") {
  TrainConfig cfg = toy_config();
  cfg.problem = "advection";
  cfg.n_c = 4;
  cfg.n_ib = 5;
  auto p = train_problem(cfg);
  auto conds = prepare_conditions(cfg, true);
  LossWeights w{1.0, 1.0};

  for (ModelKind kind : {ModelKind::Pinto, ModelKind::Deeponet}) {
    cfg.model.kind = kind;
    cfg.model.onet.trunk_in = 2;
    cfg.model.onet.branch_in = cfg.L;
    cfg.model.onet.trunk_hidden = {6, 6};
    cfg.model.onet.branch_hidden = {6};
    cfg.model.onet.p = 4;
    cfg.model.onet.fields = 1;
    ParameterStore P = init_model_params(cfg);

    P.zero_grad();
    TapeEngine tape(P);
    auto root = physics_loss_nodes(tape, p, cfg.model, conds, nullptr, w, nullptr);
    tape.backward(root);

    auto eval = [&]() {
      return physics_loss(P, p, cfg.model, conds, w).total;
    };
    double worst = 0;
    int checked = 0;
    for (const auto& name : P.names()) {
      Matrix& val = P.value(name);
      const Matrix& g = P.grad(name);
      for (long i = 0; i < val.rows(); ++i)
        for (long j = 0; j < val.cols(); ++j) {
          const double keep = val(i, j);
          const double h = 1e-6 * std::max(1.0, std::abs(keep));
          val(i, j) = keep + h;
          const double up = eval();
          val(i, j) = keep - h;
          const double dn = eval();
          val(i, j) = keep;
          const double fd = (up - dn) / (2 * h);
          const double rel = std::abs(fd - g(i, j)) /
                             std::max({std::abs(fd), std::abs(g(i, j)), 1e-3});
          worst = std::max(worst, rel);
          ++checked;
        }
    }
    INFO("kind=", kind == ModelKind::Pinto ? "pinto" : "deeponet",
         " scalars=", checked, " worst rel=", worst);
    CHECK(checked > 50);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("constant-solution toy run converges") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 2000;
  auto res = train(cfg);
  REQUIRE(!res.diverged);
  REQUIRE(res.history.size() == 2000);
  double best = res.history.front().total;
  for (const auto& h : res.history) best = std::min(best, h.total);
  INFO("final=", res.history.back().total, " best=", best);
  CHECK(best < 1e-6);
  CHECK(res.history.front().epoch == 1);
  CHECK(res.history.back().epoch == 2000);
  for (const auto& h : res.history) CHECK(h.lr == 1e-2);
}

TEST_CASE("training is deterministic") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 12;
  auto a = train(cfg);
  auto b = train(cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].physics == b.history[i].physics);
    CHECK(a.history[i].boundary == b.history[i].boundary);
  }
  CHECK(params_equal(a.last.params, b.last.params));
}

TEST_CASE("resume reproduces the uninterrupted trajectory bit for bit") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 12;
  cfg.batches = 3;
  auto full = train(cfg);

  TrainConfig head = cfg;
  head.epochs = 5;
  auto part = train(head);
  REQUIRE(part.last.trainer.has_value());
  CHECK(part.last.trainer->next_epoch == 5);
  CHECK(part.last.trainer->global_step == 5 * 3);

  auto tail = train_resume(cfg, part.last);
  REQUIRE(tail.history.size() == 7);
  for (std::size_t i = 0; i < tail.history.size(); ++i) {
    const auto& want = full.history[5 + i];
    const auto& got = tail.history[i];
    CHECK(got.epoch == want.epoch);
    CHECK(got.total == want.total);
    CHECK(got.physics == want.physics);
    CHECK(got.boundary == want.boundary);
  }
  CHECK(params_equal(tail.last.params, full.last.params));

  // resuming requires a trainer cursor and a matching architecture
  Checkpoint bare;
  bare.params = part.last.params;
  CHECK_THROWS_AS(train_resume(cfg, bare), std::invalid_argument);
  TrainConfig other = cfg;
  other.model.arch.embed = 8;
  CHECK_THROWS_AS(train_resume(other, part.last), std::invalid_argument);
}

TEST_CASE("checkpoint files round-trip bit for bit") {
  TrainConfig cfg = toy_config();
  ParameterStore P = init_model_params(cfg);
  auto opt = make_optimizer(P, cfg.opt);
  for (const auto& name : P.names()) P.grad(name).setConstant(0.3);
  optimizer_step(P, opt, 1e-3);

  Checkpoint c;
  c.config_echo = train_config_echo(cfg);
  c.params = P;
  c.opt = opt;
  c.trainer = TrainerState{7, 21, {1, 2, 3, 4}};

  auto dir = temp_dir("pinto_ckpt_test");
  auto p1 = dir + "/a.bin", p2 = dir + "/b.bin";
  write_checkpoint(c, p1);
  auto r = read_checkpoint(p1);
  write_checkpoint(r, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.size() > 0);

  CHECK(r.config_echo == c.config_echo);
  CHECK(params_equal(r.params, c.params));
  REQUIRE(r.opt.has_value());
  CHECK(r.opt->step == 1);
  CHECK(r.opt->m.at("qpe/l00/w") == opt.m.at("qpe/l00/w"));
  CHECK(r.opt->v.at("qpe/l00/w") == opt.v.at("qpe/l00/w"));
  REQUIRE(r.trainer.has_value());
  CHECK(r.trainer->next_epoch == 7);
  CHECK(r.trainer->global_step == 21);
  CHECK(r.trainer->shuffle_rng == std::array<std::uint64_t, 4>{1, 2, 3, 4});

  // corruption is rejected
  std::ofstream bad(p2, std::ios::binary | std::ios::trunc);
  bad << "not a checkpoint";
  bad.close();
  CHECK_THROWS_AS(read_checkpoint(p2), std::runtime_error);
  std::ofstream trunc(p2, std::ios::binary | std::ios::trunc);
  trunc << b1.substr(0, b1.size() / 2);
  trunc.close();
  CHECK_THROWS_AS(read_checkpoint(p2), std::runtime_error);
  std::ofstream tail(p2, std::ios::binary | std::ios::trunc);
  tail << b1 << "x";
  tail.close();
  CHECK_THROWS_WITH_AS(read_checkpoint(p2), doctest::Contains("trailing"),
                       std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training writes checkpoints and history at the configured cadence") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 20;
  cfg.out_dir = temp_dir("pinto_train_out");
  auto res = train(cfg);
  REQUIRE(!res.diverged);

  // every 10% of 20 epochs: e2, e4, ..., e20, plus the final copy
  for (int e = 2; e <= 20; e += 2) {
    char name[64];
    std::snprintf(name, sizeof name, "/checkpoint_e%06d.bin", e);
    CHECK(std::filesystem::exists(cfg.out_dir + name));
  }
  CHECK(std::filesystem::exists(cfg.out_dir + "/checkpoint_final.bin"));
  auto last = read_checkpoint(cfg.out_dir + "/checkpoint_final.bin");
  CHECK(params_equal(last.params, res.last.params));
  CHECK(last.config_echo.find("problem=toy_const") != std::string::npos);

  std::ifstream h(cfg.out_dir + "/history.csv");
  REQUIRE(h.good());
  std::string header;
  std::getline(h, header);
  CHECK(header == "epoch,total_loss,physics_term,boundary_term,lr");
  int rows = 0;
  for (std::string line; std::getline(h, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 20);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("divergence aborts and keeps the last good checkpoint") {
  TrainConfig cfg = toy_config();
  cfg.epochs = 30;
  cfg.schedule.base = 1e250;  // drives the parameters to overflow
  cfg.out_dir = temp_dir("pinto_diverge_out");
  auto res = train(cfg);
  CHECK(res.diverged);
  CHECK(res.note.find("non-finite") != std::string::npos);
  CHECK(res.history.size() < 30);
  for (const auto& name : res.last.params.names())
    CHECK(res.last.params.value(name).allFinite());
  CHECK(std::filesystem::exists(cfg.out_dir + "/checkpoint_final.bin"));
  std::filesystem::remove_all(cfg.out_dir);
}
