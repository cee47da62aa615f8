#pragma once
// Two interchangeable execution engines over the batch kernels.
//
// EvalEngine computes values straight through (inference, finite-difference
// probes). TapeEngine records every op while computing the same values and
// can then run reverse mode over the whole plane stack, accumulating
// parameter gradients into the bound ParameterStore. Network code is
// templated on the engine type, so each architecture is defined once.

#include <pinto/batch_kernels.hpp>
#include <pinto/parameter_store.hpp>

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace pinto {

enum class Act { Tanh, Swish };

inline kern::Un act_kind(Act a) {
  return a == Act::Tanh ? kern::Un::Tanh : kern::Un::Swish;
}

// Builds a query-point batch: value plane = coords, one seeded direction
// per (column, order) entry, each with a unit first-derivative seed in its
// column.
inline Batch jet_leaf(const Matrix& coords,
                      const std::vector<std::pair<int, int>>& seeds) {
  std::vector<int> ord;
  ord.reserve(seeds.size());
  for (const auto& s : seeds) ord.push_back(s.second);
  Batch b(static_cast<int>(coords.rows()), static_cast<int>(coords.cols()),
          std::move(ord));
  b.value() = coords;
  for (int d = 0; d < static_cast<int>(seeds.size()); ++d)
    b.deriv(d, 1).col(seeds[d].first).setOnes();
  return b;
}

struct EvalEngine {
  using V = Batch;
  const ParameterStore& P;
  explicit EvalEngine(const ParameterStore& p) : P(p) {}

  const Batch& peek(const V& v) const { return v; }
  V leaf(Batch b) { return b; }
  V constant(Matrix v) { return Batch::values(std::move(v)); }
  V dense(const V& x, const std::string& name) {
    return kern::affine(x, P.value(name + "/w"), P.value(name + "/b"));
  }
  V add(const V& a, const V& b) { return kern::add(a, b); }
  V sub(const V& a, const V& b) { return kern::sub(a, b); }
  V scale(const V& x, double c) { return kern::scale(x, c); }
  V cmul(const V& a, const V& b) { return kern::cmul(a, b); }
  V matmul(const V& a, const V& b) { return kern::matmul(a, b); }
  V matmul_nt(const V& a, const V& b) { return kern::matmul_nt(a, b); }
  V rowsum(const V& x) { return kern::rowsum(x); }
  V mul_rowbroadcast(const V& a, const V& s) {
    return kern::mul_rowbroadcast(a, s);
  }
  V mul_colbroadcast(const V& a, const V& s) {
    return kern::mul_colbroadcast(a, s);
  }
  V concat_cols(const V& a, const V& b) { return kern::concat_cols(a, b); }
  V extract(const V& x, int dir, int order) {
    return kern::extract_plane(x, dir, order);
  }
  V values(const V& x) { return kern::value_plane(x); }
  V shift_value_rowmax(const V& x) { return kern::shift_value_rowmax(x); }
  V unary(const V& x, kern::Un f) { return kern::unary(x, f); }
  V act(const V& x, Act f) { return unary(x, act_kind(f)); }
  V exp(const V& x) { return unary(x, kern::Un::Exp); }
  V recip(const V& x) { return unary(x, kern::Un::Recip); }
  V tanh(const V& x) { return unary(x, kern::Un::Tanh); }
  V wsum_sq(const V& x, Vector w, double denom) {
    return kern::wsum_sq(x, w, denom);
  }
  V add_scalar_param(const V& x, const std::string& name) {
    Batch y = x;
    y.value().array() += P.value(name)(0, 0);
    return y;
  }
};

class TapeEngine {
 public:
  using V = int;
  ParameterStore& P;
  explicit TapeEngine(ParameterStore& p) : P(p) {}

  const Batch& peek(V v) const { return val_[v]; }
  std::size_t node_count() const { return val_.size(); }
  const char* tag(V v) const { return tag_[v]; }

  V leaf(Batch b);
  V constant(Matrix v);
  V dense(V x, const std::string& name);
  V add(V a, V b);
  V sub(V a, V b);
  V scale(V x, double c);
  V cmul(V a, V b);
  V matmul(V a, V b);
  V matmul_nt(V a, V b);
  V rowsum(V x);
  V mul_rowbroadcast(V a, V s);
  V mul_colbroadcast(V a, V s);
  V concat_cols(V a, V b);
  V extract(V x, int dir, int order);
  V values(V x);
  V shift_value_rowmax(V x);
  V unary(V x, kern::Un f);
  V act(V x, Act f) { return unary(x, act_kind(f)); }
  V exp(V x) { return unary(x, kern::Un::Exp); }
  V recip(V x) { return unary(x, kern::Un::Recip); }
  V tanh(V x) { return unary(x, kern::Un::Tanh); }
  V wsum_sq(V x, Vector w, double denom);
  V add_scalar_param(V x, const std::string& name);

  // Reverse pass from a scalar (1x1) root; parameter gradients accumulate
  // into P.grad, input adjoints are kept and readable via adjoint().
  void backward(V root);
  const Batch& adjoint(V v) const { return adj_[v]; }

  // Index of the first node whose planes contain a non-finite entry, or -1.
  int first_nonfinite() const;

 private:
  V push(Batch b, const char* tag, std::function<void(TapeEngine&)> back);

  std::vector<Batch> val_;
  std::vector<Batch> adj_;
  std::vector<std::function<void(TapeEngine&)>> bwd_;
  std::vector<const char*> tag_;
};

// softmax over rows, built from primitives with a detached row-max shift
// (exact: softmax values, jets and adjoints are all shift invariant).
template <class E>
typename E::V softmax_rows(E& e, typename E::V scores) {
  auto shifted = e.shift_value_rowmax(scores);
  auto ex = e.exp(shifted);
  auto r = e.recip(e.rowsum(ex));
  return e.mul_rowbroadcast(ex, r);
}

}  // namespace pinto
