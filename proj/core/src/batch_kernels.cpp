#include <pinto/batch_kernels.hpp>

namespace pinto::kern {
namespace {

Batch uninit(int n, int cols, std::vector<int> ord) {
  Batch b;
  b.n = n;
  b.cols = cols;
  b.ord = std::move(ord);
  b.m.resize(b.plane_count() * n, cols);
  return b;
}

// Plane index of derivative `order` along `dir` in `b`, or -1 when the
// operand carries no such plane (it is constant along that direction).
int plane_or(const Batch& b, int dir, int order) {
  if (b.values_only()) return -1;
  return b.plane_index(dir, order);
}

// Enumerates the terms of the per-direction second-order product rule for
// z = a ⊗ b over plane layout zord:
//   z0 = a0 b0
//   z1 = a1 b0 + a0 b1
//   z2 = a2 b0 + 2 a1 b1 + a0 b2
// emit(zp, ap, bp, c) contributes c * (a plane ap ⊗ b plane bp) to z plane
// zp; terms whose operand plane is absent (-1) are skipped by the caller.
template <class F>
void jet_product_terms(const std::vector<int>& zord, const Batch& a,
                       const Batch& b, F&& emit) {
  emit(0, 0, 0, 1.0);
  int zp = 1;
  for (int d = 0; d < static_cast<int>(zord.size()); ++d) {
    const int a1 = plane_or(a, d, 1), b1 = plane_or(b, d, 1);
    emit(zp, a1, 0, 1.0);
    emit(zp, 0, b1, 1.0);
    if (zord[d] >= 2) {
      const int a2 = plane_or(a, d, 2), b2 = plane_or(b, d, 2);
      emit(zp + 1, a2, 0, 1.0);
      emit(zp + 1, a1, b1, 2.0);
      emit(zp + 1, 0, b2, 1.0);
    }
    zp += zord[d];
  }
}

struct UnTabs {
  Array g0, g1, g2, g3;  // f and derivatives on the value plane
};

UnTabs un_tabs(Un f, const Eigen::Ref<const Matrix>& v, int upto) {
  UnTabs t;
  const Array x = v.array();
  switch (f) {
    case Un::Tanh: {
      const Array th = x.tanh();
      const Array s2 = 1.0 - th.square();
      t.g0 = th;
      if (upto >= 1) t.g1 = s2;
      if (upto >= 2) t.g2 = -2.0 * th * s2;
      if (upto >= 3) t.g3 = (6.0 * th.square() - 2.0) * s2;
      break;
    }
    case Un::Swish: {
      const Array s = 1.0 / (1.0 + (-x).exp());
      const Array s1 = s * (1.0 - s);
      const Array s2 = s1 * (1.0 - 2.0 * s);
      const Array s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1.square();
      t.g0 = x * s;
      if (upto >= 1) t.g1 = s + x * s1;
      if (upto >= 2) t.g2 = 2.0 * s1 + x * s2;
      if (upto >= 3) t.g3 = 3.0 * s2 + x * s3;
      break;
    }
    case Un::Exp: {
      t.g0 = x.exp();
      if (upto >= 1) t.g1 = t.g0;
      if (upto >= 2) t.g2 = t.g0;
      if (upto >= 3) t.g3 = t.g0;
      break;
    }
    case Un::Recip: {
      const Array r = x.inverse();
      const Array r2 = r.square();
      t.g0 = r;
      if (upto >= 1) t.g1 = -r2;
      if (upto >= 2) t.g2 = 2.0 * r2 * r;
      if (upto >= 3) t.g3 = -6.0 * r2.square();
      break;
    }
    case Un::Sin: {
      const Array s = x.sin(), c = x.cos();
      t.g0 = s;
      if (upto >= 1) t.g1 = c;
      if (upto >= 2) t.g2 = -s;
      if (upto >= 3) t.g3 = -c;
      break;
    }
    case Un::Square: {
      t.g0 = x.square();
      if (upto >= 1) t.g1 = 2.0 * x;
      if (upto >= 2) t.g2 = Array::Constant(x.rows(), x.cols(), 2.0);
      if (upto >= 3) t.g3 = Array::Zero(x.rows(), x.cols());
      break;
    }
  }
  return t;
}

int max_order(const Batch& x) {
  int mo = 0;
  for (int o : x.ord) mo = std::max(mo, o);
  return mo;
}

}  // namespace

Batch affine(const Batch& x, const Matrix& W, const Matrix& b) {
  if (x.cols != W.rows() || W.cols() != b.cols() || b.rows() != 1)
    throw std::invalid_argument("affine: shape mismatch");
  Batch y = uninit(x.n, static_cast<int>(W.cols()), x.ord);
  y.m.noalias() = x.m * W;
  y.value().rowwise() += b.row(0);
  return y;
}

void affine_bwd(const Batch& x, const Matrix& W, const Batch& gy, Batch& gx,
                Matrix& gW, Matrix& gb) {
  gx.m.noalias() += gy.m * W.transpose();
  gW.noalias() += x.m.transpose() * gy.m;
  gb.row(0) += gy.value().colwise().sum();
}

Batch add(const Batch& a, const Batch& b) {
  check_same_rows(a, b, "add");
  if (a.cols != b.cols) throw std::invalid_argument("add: column mismatch");
  Batch z = uninit(a.n, a.cols, merged_ord(a, b));
  if (a.ord == b.ord) {
    z.m = a.m + b.m;
  } else if (b.values_only()) {
    z.m = a.m;
    z.value() += b.value();
  } else {
    z.m = b.m;
    z.value() += a.value();
  }
  return z;
}

Batch sub(const Batch& a, const Batch& b) {
  check_same_rows(a, b, "sub");
  if (a.cols != b.cols) throw std::invalid_argument("sub: column mismatch");
  Batch z = uninit(a.n, a.cols, merged_ord(a, b));
  if (a.ord == b.ord) {
    z.m = a.m - b.m;
  } else if (b.values_only()) {
    z.m = a.m;
    z.value() -= b.value();
  } else {
    z.m = -b.m;
    z.value() += a.value();
  }
  return z;
}

void addsub_bwd(const Batch& gy, double sign_b, Batch& ga, Batch& gb) {
  if (ga.ord == gy.ord)
    ga.m += gy.m;
  else
    ga.m += gy.value();
  if (gb.ord == gy.ord)
    gb.m += sign_b * gy.m;
  else
    gb.m += sign_b * gy.value();
}

Batch scale(const Batch& x, double c) {
  Batch y = uninit(x.n, x.cols, x.ord);
  y.m = c * x.m;
  return y;
}

Batch cmul(const Batch& a, const Batch& b) {
  check_same_rows(a, b, "cmul");
  if (a.cols != b.cols) throw std::invalid_argument("cmul: column mismatch");
  Batch z(a.n, a.cols, merged_ord(a, b));
  jet_product_terms(z.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    z.plane(zp).array() += c * a.plane(ap).array() * b.plane(bp).array();
  });
  return z;
}

void cmul_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
              Batch& gb) {
  jet_product_terms(gz.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    ga.plane(ap).array() += c * gz.plane(zp).array() * b.plane(bp).array();
    gb.plane(bp).array() += c * gz.plane(zp).array() * a.plane(ap).array();
  });
}

Batch matmul(const Batch& a, const Batch& b) {
  if (a.cols != b.n) throw std::invalid_argument("matmul: inner dim mismatch");
  if (b.values_only()) {
    Batch z = uninit(a.n, b.cols, a.ord);
    z.m.noalias() = a.m * b.m;
    return z;
  }
  Batch z(a.n, b.cols, merged_ord(a, b));
  jet_product_terms(z.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    z.plane(zp).noalias() += c * (a.plane(ap) * b.plane(bp));
  });
  return z;
}

void matmul_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
                Batch& gb) {
  if (b.values_only()) {
    ga.m.noalias() += gz.m * b.m.transpose();
    gb.m.noalias() += a.m.transpose() * gz.m;
    return;
  }
  jet_product_terms(gz.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    ga.plane(ap).noalias() += c * (gz.plane(zp) * b.plane(bp).transpose());
    gb.plane(bp).noalias() += c * (a.plane(ap).transpose() * gz.plane(zp));
  });
}

Batch matmul_nt(const Batch& a, const Batch& b) {
  if (a.cols != b.cols)
    throw std::invalid_argument("matmul_nt: inner dim mismatch");
  if (b.values_only()) {
    Batch z = uninit(a.n, b.n, a.ord);
    z.m.noalias() = a.m * b.m.transpose();
    return z;
  }
  Batch z(a.n, b.n, merged_ord(a, b));
  jet_product_terms(z.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    z.plane(zp).noalias() += c * (a.plane(ap) * b.plane(bp).transpose());
  });
  return z;
}

void matmul_nt_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
                   Batch& gb) {
  if (b.values_only()) {
    ga.m.noalias() += gz.m * b.m;
    gb.m.noalias() += gz.m.transpose() * a.m;
    return;
  }
  jet_product_terms(gz.ord, a, b, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    ga.plane(ap).noalias() += c * (gz.plane(zp) * b.plane(bp));
    gb.plane(bp).noalias() += c * (gz.plane(zp).transpose() * a.plane(ap));
  });
}

Batch rowsum(const Batch& x) {
  Batch y = uninit(x.n, 1, x.ord);
  y.m = x.m.rowwise().sum();
  return y;
}

void rowsum_bwd(const Batch& gy, Batch& gx) {
  gx.m.colwise() += gy.m.col(0);
}

Batch mul_rowbroadcast(const Batch& a, const Batch& s) {
  check_same_rows(a, s, "mul_rowbroadcast");
  if (s.cols != 1)
    throw std::invalid_argument("mul_rowbroadcast: scaler must have one column");
  Batch z(a.n, a.cols, merged_ord(a, s));
  jet_product_terms(z.ord, a, s, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    z.plane(zp).array() +=
        c * (a.plane(ap).array().colwise() * s.plane(bp).col(0).array());
  });
  return z;
}

void mul_rowbroadcast_bwd(const Batch& a, const Batch& s, const Batch& gz,
                          Batch& ga, Batch& gs) {
  jet_product_terms(gz.ord, a, s, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    ga.plane(ap).array() +=
        c * (gz.plane(zp).array().colwise() * s.plane(bp).col(0).array());
    gs.plane(bp).col(0) +=
        c * gz.plane(zp).cwiseProduct(a.plane(ap)).rowwise().sum();
  });
}

Batch mul_colbroadcast(const Batch& a, const Batch& s) {
  if (s.n != 1 || s.cols != a.cols)
    throw std::invalid_argument("mul_colbroadcast: scaler must be 1 x cols");
  Batch z(a.n, a.cols, merged_ord(a, s));
  jet_product_terms(z.ord, a, s, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    z.plane(zp).array() +=
        c * (a.plane(ap).array().rowwise() * s.plane(bp).row(0).array());
  });
  return z;
}

void mul_colbroadcast_bwd(const Batch& a, const Batch& s, const Batch& gz,
                          Batch& ga, Batch& gs) {
  jet_product_terms(gz.ord, a, s, [&](int zp, int ap, int bp, double c) {
    if (ap < 0 || bp < 0) return;
    ga.plane(ap).array() +=
        c * (gz.plane(zp).array().rowwise() * s.plane(bp).row(0).array());
    gs.plane(bp).row(0) +=
        c * gz.plane(zp).cwiseProduct(a.plane(ap)).colwise().sum();
  });
}

Batch concat_cols(const Batch& a, const Batch& b) {
  check_same_rows(a, b, "concat_cols");
  Batch z(a.n, a.cols + b.cols, merged_ord(a, b));
  const bool a_full = (a.ord == z.ord), b_full = (b.ord == z.ord);
  for (int p = 0; p < z.plane_count(); ++p) {
    if (a_full || p == 0) z.plane(p).leftCols(a.cols) = a.plane(a_full ? p : 0);
    if (b_full || p == 0) z.plane(p).rightCols(b.cols) = b.plane(b_full ? p : 0);
  }
  return z;
}

void concat_cols_bwd(const Batch& gy, Batch& ga, Batch& gb) {
  const bool a_full = (ga.ord == gy.ord), b_full = (gb.ord == gy.ord);
  for (int p = 0; p < gy.plane_count(); ++p) {
    if (a_full || p == 0) ga.plane(a_full ? p : 0) += gy.plane(p).leftCols(ga.cols);
    if (b_full || p == 0) gb.plane(b_full ? p : 0) += gy.plane(p).rightCols(gb.cols);
  }
}

Batch extract_plane(const Batch& x, int dir, int order) {
  if (dir < 0 || dir >= x.dirs() || order < 1 || order > x.ord[dir])
    throw std::invalid_argument("extract_plane: no such plane");
  return Batch::values(x.plane(x.plane_index(dir, order)));
}

void extract_plane_bwd(const Batch& gy, int dir, int order, Batch& gx) {
  gx.plane(gx.plane_index(dir, order)) += gy.m;
}

Batch value_plane(const Batch& x) { return Batch::values(x.value()); }

void value_plane_bwd(const Batch& gy, Batch& gx) { gx.value() += gy.m; }

Batch shift_value_rowmax(const Batch& x) {
  Batch y = x;
  const Vector mx = x.value().rowwise().maxCoeff();
  y.value().colwise() -= mx;
  return y;
}

Batch unary(const Batch& x, Un f) {
  const int mo = max_order(x);
  const UnTabs t = un_tabs(f, x.value(), mo);
  Batch y = uninit(x.n, x.cols, x.ord);
  y.value() = t.g0;
  for (int d = 0; d < x.dirs(); ++d) {
    const auto x1 = x.deriv(d, 1).array();
    y.deriv(d, 1) = (t.g1 * x1).matrix();
    if (x.ord[d] >= 2)
      y.deriv(d, 2) = (t.g2 * x1.square() + t.g1 * x.deriv(d, 2).array()).matrix();
  }
  return y;
}

void unary_bwd(const Batch& x, Un f, const Batch& gy, Batch& gx) {
  const int mo = max_order(x);
  const UnTabs t = un_tabs(f, x.value(), mo + 1);
  gx.value().array() += gy.value().array() * t.g1;
  for (int d = 0; d < x.dirs(); ++d) {
    const auto x1 = x.deriv(d, 1).array();
    const auto gy1 = gy.deriv(d, 1).array();
    gx.value().array() += gy1 * t.g2 * x1;
    gx.deriv(d, 1).array() += gy1 * t.g1;
    if (x.ord[d] >= 2) {
      const auto x2 = x.deriv(d, 2).array();
      const auto gy2 = gy.deriv(d, 2).array();
      gx.value().array() += gy2 * (t.g3 * x1.square() + t.g2 * x2);
      gx.deriv(d, 1).array() += gy2 * 2.0 * t.g2 * x1;
      gx.deriv(d, 2).array() += gy2 * t.g1;
    }
  }
}

Batch wsum_sq(const Batch& x, const Vector& w, double denom) {
  if (w.size() && w.size() != x.n)
    throw std::invalid_argument("wsum_sq: weight length mismatch");
  double s;
  if (w.size())
    s = (x.value().array().square().colwise() * w.array()).sum() / denom;
  else
    s = x.value().squaredNorm() / denom;
  Batch y(1, 1);
  y.m(0, 0) = s;
  return y;
}

void wsum_sq_bwd(const Batch& x, const Vector& w, double denom, double gout,
                 Batch& gx) {
  const double c = 2.0 * gout / denom;
  if (w.size())
    gx.value().array() += c * (x.value().array().colwise() * w.array());
  else
    gx.value() += c * x.value();
}

}  // namespace pinto::kern
