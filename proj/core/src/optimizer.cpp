#include "pinto/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace pinto {

OptimizerState make_optimizer(const ParameterStore& P,
                              const OptimizerConfig& cfg) {
  if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
    throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
  if (cfg.eps <= 0) throw std::invalid_argument("optimizer: eps must be > 0");
  if (cfg.weight_decay < 0)
    throw std::invalid_argument("optimizer: weight decay must be >= 0");
  OptimizerState st;
  st.cfg = cfg;
  for (const auto& [name, val] : P) {
    st.m[name] = Matrix::Zero(val.rows(), val.cols());
    st.v[name] = Matrix::Zero(val.rows(), val.cols());
  }
  return st;
}

void optimizer_step(ParameterStore& P, OptimizerState& st, double lr) {
  if (!(lr > 0)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (st.m.size() != P.size())
    throw std::invalid_argument("optimizer: state/parameter mismatch");
  st.step += 1;
  const double c1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step));
  for (const auto& name : P.names()) {
    Matrix& w = P.value(name);
    const Matrix& g = P.grad(name);
    auto mi = st.m.find(name);
    auto vi = st.v.find(name);
    if (mi == st.m.end() || vi == st.v.end())
      throw std::invalid_argument("optimizer: no moments for " + name);
    Matrix& m = mi->second;
    Matrix& v = vi->second;
    m = st.cfg.beta1 * m + (1.0 - st.cfg.beta1) * g;
    v = st.cfg.beta2 * v + (1.0 - st.cfg.beta2) * g.cwiseProduct(g);
    if (st.cfg.kind == OptKind::AdamW && st.cfg.weight_decay > 0)
      w *= 1.0 - lr * st.cfg.weight_decay;
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.cfg.eps);
  }
}

double Schedule::lr(std::int64_t t) const {
  switch (kind) {
    case Kind::Constant:
      return base;
    case Kind::Exponential:
      return base * std::pow(rate, static_cast<double>(t) / steps);
    case Kind::Piecewise: {
      std::size_t i = 0;
      while (i < boundaries.size() && t >= boundaries[i]) ++i;
      return values.at(i);
    }
  }
  throw std::logic_error("schedule: unknown kind");
}

void Schedule::validate() const {
  if (kind == Kind::Piecewise) {
    if (values.size() != boundaries.size() + 1)
      throw std::invalid_argument(
          "schedule: piecewise needs boundaries.size() + 1 values");
    for (std::size_t i = 1; i < boundaries.size(); ++i)
      if (boundaries[i] <= boundaries[i - 1])
        throw std::invalid_argument(
            "schedule: boundaries must be strictly increasing");
    for (double v : values)
      if (!(v > 0))
        throw std::invalid_argument("schedule: rates must be positive");
    return;
  }
  if (!(base > 0))
    throw std::invalid_argument("schedule: base rate must be positive");
  if (kind == Kind::Exponential && (!(rate > 0) || !(steps > 0)))
    throw std::invalid_argument("schedule: decay rate and steps must be positive");
}

}  // namespace pinto
