#pragma once
// Tensor-product reference solutions: grid axes + per-node field values,
// CSV import/export (round-trips at 17 significant digits) and multilinear sampling.

#include <string>
#include <vector>

#include "pinto/batch.hpp"

namespace pinto {

struct ReferenceField {
  std::vector<std::string> axis_names;        // subset of {x, y, t}, outer-to-inner
  std::vector<std::vector<double>> axes;      // strictly increasing coordinates per axis
  std::vector<std::string> field_names;
  Matrix values;                              // node count x field count, last axis fastest
  std::string provenance;                     // analytic | fd-oracle | fv-oracle | imported-csv

  int axis_count() const { return static_cast<int>(axes.size()); }
  int field_count() const { return static_cast<int>(field_names.size()); }
  long node_count() const;
  long node_index(const std::vector<int>& idx) const;
  // coordinates of a flat node index, outer-to-inner
  std::vector<double> node_coords(long flat) const;
  // multilinear interpolation; clamps to the grid hull
  double sample(const std::vector<double>& x, int field) const;
  void validate() const;  // throws on shape mismatch, non-monotone axes, non-finite values
};

ReferenceField read_reference_csv(const std::string& path);
void write_reference_csv(const ReferenceField& f, const std::string& path);

}  // namespace pinto
