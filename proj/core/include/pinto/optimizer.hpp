#pragma once
// Adam/AdamW with bias correction plus the learning-rate schedules used by
// the experiments. Moment maps mirror the parameter store; updates walk
// parameter names in lexicographic order, so trajectories do not depend on
// construction order.

#include <pinto/parameter_store.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pinto {

enum class OptKind { Adam, AdamW };

struct OptimizerConfig {
  OptKind kind = OptKind::Adam;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 0.0;  // adamw: decoupled, w *= 1 - lr*wd before the adam delta
};

struct OptimizerState {
  OptimizerConfig cfg;
  std::int64_t step = 0;               // completed updates
  std::map<std::string, Matrix> m, v;  // first/second moments, parameter shapes
};

OptimizerState make_optimizer(const ParameterStore& P, const OptimizerConfig& cfg);

// One synchronized update from the gradients accumulated in P.grad.
void optimizer_step(ParameterStore& P, OptimizerState& st, double lr);

struct Schedule {
  enum class Kind { Constant, Exponential, Piecewise };
  Kind kind = Kind::Constant;
  double base = 1e-3;
  double rate = 0.9;     // exponential decay factor
  double steps = 10000;  // exponential denominator; the exponent t/steps is real
  std::vector<std::int64_t> boundaries;  // piecewise: strictly increasing steps
  std::vector<double> values;            // piecewise: boundaries.size() + 1 rates

  // Learning rate at optimizer step t (0-based). Piecewise intervals are
  // left-closed: the new value applies at the boundary step itself.
  double lr(std::int64_t t) const;
  void validate() const;  // throws unless lr(t) > 0 for every t
};

}  // namespace pinto
