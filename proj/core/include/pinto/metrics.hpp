#pragma once
// Error metrics, model evaluation against the problem oracles, and one-axis
// error sweeps (error versus time, reynolds number, or lid speed).
//
// Metric conventions: the headline figure is the modified relative error
// |h - h_hat| / (1 + |h|), whose denominator degrades to absolute error near
// zero truth values. Group (seen/unseen) means weight conditions equally
// (mean of per-condition means); standard deviations and the standard
// metrics are computed over all pooled points. Navier-Stokes reports compare
// the velocity magnitude sqrt(u^2 + v^2), never a silent component average.

#include <pinto/oracles.hpp>
#include <pinto/training.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pinto {

struct StandardMetrics {
  double rmse = 0, mae = 0;
  std::optional<double> nrmse, mape;  // empty when the normalizer vanishes
};

StandardMetrics standard_metrics(const Vector& h, const Vector& h_hat);

struct ModifiedRelError {
  Vector pointwise;             // |h - h_hat| / (1 + |h|)
  double mean = 0, stddev = 0;  // population std over points
};

ModifiedRelError modified_relative_error(const Vector& h, const Vector& h_hat);

struct ConditionMetrics {
  int condition_index = 0;
  bool seen = true;
  double value = 0;  // reynolds number / lid speed when applicable
  long points = 0;
  double mre_mean = 0, mre_std = 0;
  StandardMetrics standard;
};

struct GroupMetrics {
  long conditions = 0, points = 0;
  double mre_mean = 0, mre_std = 0;  // mean of condition means; pooled std
  StandardMetrics standard;          // over pooled points
};

GroupMetrics aggregate_group(const std::vector<double>& condition_means,
                             const Vector& pooled_mre, const Vector& pooled_h,
                             const Vector& pooled_hat);

struct MetricReport {
  std::string problem;
  std::string field;  // "u" for scalar problems, "|V|" for navier-stokes
  std::vector<ConditionMetrics> conditions;
  GroupMetrics seen, unseen;
};

// model outputs at arbitrary coordinates (rows) under one condition; the
// boundary sequence is rebuilt exactly as during training
Matrix predict_at(const ParameterStore& P, const TrainConfig& cfg,
                  const Condition& c, const Matrix& coords);

// model predictions on the tensor grid oracle_field uses (same axes/layout)
ReferenceField predict_field(const ParameterStore& P, const TrainConfig& cfg,
                             const Condition& c, const std::vector<int>& sizes);

// every seen and unseen condition against its oracle on the given grid
MetricReport evaluate_model(const ParameterStore& P, const TrainConfig& cfg,
                            const std::vector<int>& sizes);

struct SweepPoint {
  double value = 0;
  double mre_mean = 0;
};

// axis "time": spatial grid `sizes`, slice error averaged over the unseen
// conditions (seen when none); axis "re" / "lid": one condition per value on
// the full grid `sizes`.
std::vector<SweepPoint> sweep(const ParameterStore& P, const TrainConfig& cfg,
                              const std::string& axis,
                              const std::vector<double>& values,
                              const std::vector<int>& sizes);

void write_metric_csv(const MetricReport& r, const std::string& path);
void write_sweep_csv(const std::vector<SweepPoint>& curve,
                     const std::string& path);
std::string format_metric_table(const MetricReport& r);

}  // namespace pinto
