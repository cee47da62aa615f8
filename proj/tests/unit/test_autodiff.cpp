#include <doctest.h>
#include <pinto/engine.hpp>
#include <pinto/rng.hpp>

#include <cmath>
#include <string>
#include <vector>

using namespace pinto;

namespace {

Matrix randm(Rng& rng, int r, int c, double s = 0.5) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = s * rng.normal();
  return m;
}

struct Fixture {
  ParameterStore P;
  Matrix qpts, tokens, bsrc, bsrc2, targets;
  Vector w;

  Fixture() {
    Rng rng(1234);
    P.add("enc0/w", randm(rng, 2, 8));
    P.add("enc0/b", randm(rng, 1, 8));
    P.add("key/w", randm(rng, 2, 8));
    P.add("key/b", randm(rng, 1, 8));
    P.add("val/w", randm(rng, 2, 8));
    P.add("val/b", randm(rng, 1, 8));
    P.add("out/w", randm(rng, 16, 1));
    P.add("out/b", randm(rng, 1, 1));
    P.add("branch/w", randm(rng, 2, 8));
    P.add("branch/b", randm(rng, 1, 8));
    P.add("mm/w", randm(rng, 3, 3));
    P.add("mm/b", randm(rng, 1, 3));
    P.add("nt/w", randm(rng, 3, 8));
    P.add("nt/b", randm(rng, 1, 8));
    P.add("gain", randm(rng, 1, 1));
    qpts = randm(rng, 5, 2, 0.8);
    tokens = randm(rng, 3, 2, 0.8);
    bsrc = randm(rng, 8, 3, 0.6);
    bsrc2 = randm(rng, 4, 3, 0.6);
    targets = randm(rng, 5, 1, 0.7);
    w = randm(rng, 5, 1, 1.0).cwiseAbs().col(0) + Vector::Constant(5, 0.1);
  }
};

// One tiny cross-attention head followed by residual-style plane mixing,
// plus side pipelines that hit matmul/matmul_nt with jets on both operands
// and the column-broadcast/scalar-bias path. Uses every engine op, so the
// finite-difference sweep below exercises every adjoint rule, including
// third-derivative terms of the activations.
template <class E>
typename E::V test_loss(E& e, const Fixture& f) {
  const int n = static_cast<int>(f.qpts.rows());
  auto q = e.leaf(jet_leaf(f.qpts, {{0, 2}, {1, 1}}));
  auto tok = e.leaf(Batch::values(f.tokens));
  auto h = e.act(e.dense(q, "enc0"), Act::Tanh);
  auto k = e.act(e.dense(tok, "key"), Act::Swish);
  auto v = e.dense(tok, "val");
  auto sc = e.scale(e.matmul_nt(h, k), 1.0 / std::sqrt(8.0));
  auto zeta = softmax_rows(e, sc);
  auto z = e.matmul(zeta, v);
  auto cat = e.concat_cols(z, h);
  auto u = e.act(e.dense(cat, "out"), Act::Swish);  // n x 1, carries jets
  auto uv = e.values(u);
  auto ux = e.extract(u, 0, 1);
  auto uxx = e.extract(u, 0, 2);
  auto ut = e.extract(u, 1, 1);
  auto r = e.sub(e.add(ut, e.cmul(uv, ux)), e.scale(uxx, 0.1));
  auto usq = e.cmul(u, u);  // jets x jets elementwise
  r = e.add(r, e.scale(e.extract(usq, 0, 1), 0.05));
  auto phys = e.wsum_sq(r, f.w, static_cast<double>(n));

  // value-only branch row scaling a jet-carrying activation columnwise
  auto one = e.leaf(Batch::values(Matrix::Ones(1, 2)));
  auto brow = e.dense(one, "branch");
  auto mixed = e.mul_colbroadcast(z, brow);
  auto summed = e.rowsum(mixed);
  auto sv = e.add_scalar_param(e.values(summed), "gain");
  auto data =
      e.wsum_sq(e.sub(sv, e.constant(f.targets)), Vector(), static_cast<double>(n));

  // contraction with jets on both operands
  auto bj = e.dense(e.leaf(jet_leaf(f.bsrc, {{0, 2}, {1, 1}})), "mm");
  auto mm = e.matmul(h, e.dense(bj, "nt"));  // (n x 8)(8 x 8)
  auto mm_term = e.wsum_sq(e.extract(mm, 0, 2), Vector(), 8.0);

  auto ntj = e.dense(e.leaf(jet_leaf(f.bsrc2, {{0, 2}, {1, 1}})), "nt");
  auto nt = e.matmul_nt(h, ntj);  // (n x 8)(4 x 8)^T
  auto nt_term = e.wsum_sq(e.extract(nt, 1, 1), Vector(), 4.0);

  auto total = e.add(e.scale(phys, 0.7), e.scale(data, 0.3));
  total = e.add(total, e.add(e.scale(mm_term, 0.1), e.scale(nt_term, 0.1)));
  return total;
}

double eval_loss(const Fixture& f) {
  EvalEngine e(f.P);
  return test_loss(e, f).value()(0, 0);
}

}  // namespace

TEST_CASE("eval and tape engines produce bitwise-identical forwards") {
  Fixture f;
  const double le = eval_loss(f);
  TapeEngine t(f.P);
  const double lt = t.peek(test_loss(t, f)).value()(0, 0);
  CHECK(le == lt);
}

TEST_CASE("reverse-mode parameter gradients match finite differences") {
  Fixture f;
  TapeEngine t(f.P);
  auto root = test_loss(t, f);
  f.P.zero_grad();
  t.backward(root);

  const double h = 1e-5;
  int checked = 0;
  for (const auto& name : f.P.names()) {
    Matrix& pv = f.P.value(name);
    const Matrix g = f.P.grad(name);
    for (int i = 0; i < pv.rows(); ++i) {
      for (int j = 0; j < pv.cols(); ++j) {
        const double keep = pv(i, j);
        pv(i, j) = keep + h;
        const double lp = eval_loss(f);
        pv(i, j) = keep - h;
        const double lm = eval_loss(f);
        pv(i, j) = keep;
        const double fd = (lp - lm) / (2 * h);
        const double tol =
            3e-6 * std::max({1.0, std::abs(fd), std::abs(g(i, j))});
        INFO(name, "(", i, ",", j, "): fd=", fd, " grad=", g(i, j));
        CHECK(std::abs(fd - g(i, j)) <= tol);
        ++checked;
      }
    }
  }
  CHECK(checked == static_cast<int>(f.P.scalar_count()));
}

TEST_CASE("jet planes match finite differences of the value plane") {
  Fixture f;

  auto value_at = [&](const Matrix& pts) {
    EvalEngine e(f.P);
    auto q = e.leaf(jet_leaf(pts, {{0, 2}, {1, 1}}));
    auto tok = e.leaf(Batch::values(f.tokens));
    auto h = e.act(e.dense(q, "enc0"), Act::Tanh);
    auto k = e.act(e.dense(tok, "key"), Act::Swish);
    auto v = e.dense(tok, "val");
    auto sc = e.scale(e.matmul_nt(h, k), 1.0 / std::sqrt(8.0));
    auto zeta = softmax_rows(e, sc);
    auto z = e.matmul(zeta, v);
    auto cat = e.concat_cols(z, h);
    return e.act(e.dense(cat, "out"), Act::Swish);
  };

  const Batch u = value_at(f.qpts);
  const double h = 1e-5;
  for (int dir = 0; dir < 2; ++dir) {
    Matrix up = f.qpts, dn = f.qpts;
    up.col(dir).array() += h;
    dn.col(dir).array() -= h;
    const Matrix fp = value_at(up).value();
    const Matrix fm = value_at(dn).value();
    const Matrix d1 = (fp - fm) / (2 * h);
    for (int i = 0; i < u.n; ++i)
      CHECK(u.deriv(dir, 1)(i, 0) == doctest::Approx(d1(i, 0)).epsilon(1e-6));
    if (dir == 0) {
      const Matrix d2 = (fp - 2 * u.value() + fm) / (h * h);
      for (int i = 0; i < u.n; ++i)
        CHECK(u.deriv(0, 2)(i, 0) ==
              doctest::Approx(d2(i, 0)).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("softmax rows are a simplex") {
  Fixture f;
  EvalEngine e(f.P);
  auto q = e.leaf(jet_leaf(f.qpts, {{0, 2}, {1, 1}}));
  auto h = e.act(e.dense(q, "enc0"), Act::Tanh);
  Rng rng(5);
  auto k = e.leaf(Batch::values(randm(rng, 3, 8)));
  auto zeta = softmax_rows(e, e.matmul_nt(h, k));
  const Matrix sv = zeta.value();
  for (int i = 0; i < sv.rows(); ++i) {
    CHECK(sv.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sv.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("backward requires a scalar root") {
  Fixture f;
  TapeEngine t(f.P);
  auto q = t.leaf(jet_leaf(f.qpts, {{0, 1}}));
  auto y = t.dense(q, "enc0");
  CHECK_THROWS_AS(t.backward(y), std::invalid_argument);
}

TEST_CASE("incompatible jet layouts are rejected") {
  Batch a(4, 2, {1, 1});
  Batch b(4, 2, {2});
  CHECK_THROWS_AS(kern::add(a, b), std::invalid_argument);
}

TEST_CASE("first_nonfinite locates poisoned nodes") {
  Fixture f;
  TapeEngine t(f.P);
  auto root = test_loss(t, f);
  (void)root;
  CHECK(t.first_nonfinite() == -1);
  Matrix bad = Matrix::Ones(2, 2);
  bad(1, 1) = std::nan("");
  t.leaf(Batch::values(bad));
  CHECK(t.first_nonfinite() >= 0);
}
