#pragma once
// Batched values carrying forward-mode jet planes.
//
// A Batch is an n x cols value matrix together with directional-derivative
// planes for a set of seeded input directions. Plane 0 is the value; each
// direction d contributes ord[d] planes (first derivative, optionally
// second). Planes are stacked vertically in one matrix so plane-oblivious
// linear ops (dense layers, attention contractions against constant
// operands) run as a single matrix product over all planes.
//
// Plane layout for ord = {2, 1}:
//   rows [0,n)    value
//   rows [n,2n)   d/d dir0
//   rows [2n,3n)  d^2/d dir0^2
//   rows [3n,4n)  d/d dir1

#include <Eigen/Dense>

#include <cassert>
#include <stdexcept>
#include <vector>

namespace pinto {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Array = Eigen::ArrayXXd;

struct Batch {
  int n = 0;     // logical rows per plane
  int cols = 0;
  std::vector<int> ord;  // per-direction jet order (1 or 2); empty = plain values
  Matrix m;      // (plane_count()*n) x cols

  Batch() = default;
  Batch(int n_, int cols_, std::vector<int> ord_ = {})
      : n(n_), cols(cols_), ord(std::move(ord_)) {
    m = Matrix::Zero(plane_count() * n, cols);
  }

  static Batch values(Matrix v, std::vector<int> ord_ = {}) {
    Batch b;
    b.n = static_cast<int>(v.rows());
    b.cols = static_cast<int>(v.cols());
    b.ord = std::move(ord_);
    if (b.ord.empty()) {
      b.m = std::move(v);
    } else {
      b.m = Matrix::Zero(b.plane_count() * b.n, b.cols);
      b.m.topRows(b.n) = v;
    }
    return b;
  }

  int dirs() const { return static_cast<int>(ord.size()); }
  int plane_count() const {
    int p = 1;
    for (int o : ord) p += o;
    return p;
  }
  bool values_only() const { return ord.empty(); }

  // Plane row offset of derivative `order` (1 or 2) along `dir`.
  int plane_index(int dir, int order) const {
    assert(dir >= 0 && dir < dirs());
    assert(order >= 1 && order <= ord[dir]);
    int p = 1;
    for (int d = 0; d < dir; ++d) p += ord[d];
    return p + order - 1;
  }

  auto plane(int p) { return m.middleRows(p * n, n); }
  auto plane(int p) const { return m.middleRows(p * n, n); }
  auto value() { return plane(0); }
  auto value() const { return plane(0); }
  auto deriv(int dir, int order) { return plane(plane_index(dir, order)); }
  auto deriv(int dir, int order) const { return plane(plane_index(dir, order)); }

  Batch zeros_like() const { return Batch(n, cols, ord); }

  bool same_shape(const Batch& o) const {
    return n == o.n && cols == o.cols && ord == o.ord;
  }
};

// Operands of a binary op must share the jet layout, or one side must be a
// plain value batch (treated as constant along every seeded direction).
inline const std::vector<int>& merged_ord(const Batch& a, const Batch& b) {
  if (a.ord == b.ord || b.values_only()) return a.ord;
  if (a.values_only()) return b.ord;
  throw std::invalid_argument("batch: incompatible jet layouts");
}

inline void check_same_rows(const Batch& a, const Batch& b, const char* op) {
  if (a.n != b.n)
    throw std::invalid_argument(std::string(op) + ": row count mismatch");
}

}  // namespace pinto
