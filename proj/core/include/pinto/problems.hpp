#pragma once
// The five benchmark problems: domain descriptors, closed-form solutions,
// and residual evaluators usable both on scalar jet bundles (oracle checks)
// and on engine nodes carrying jet planes (training).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pinto/jet.hpp"

namespace pinto {

inline constexpr double pi = std::numbers::pi;

struct PdeProblem {
  std::string name;           // advection | burgers | kovasznay | beltrami | lid_cavity | toy_const
  int coord_dim = 0;          // query/boundary coordinate dimension
  int field_count = 0;        // solution components
  bool steady = false;
  std::vector<std::pair<double, double>> bounds;  // per coordinate, time last when present
  std::vector<std::pair<int, int>> jet_seeds;     // (coordinate column, jet order) per direction
  double beta = 0.0;          // advection speed
  double nu = 0.0;            // burgers viscosity
  double re = 0.0;            // fixed lid-cavity reynolds number
};

// beta/nu/re defaults: 0.1 / 0.01 / 50
PdeProblem make_problem(const std::string& name, double beta = 0.1, double nu = 0.01, double re = 50.0);

// per-field derivative bundle at one point
struct FieldJets {
  double v = 0, dx = 0, dy = 0, dt = 0, dxx = 0, dyy = 0;
};

inline double advection_residual(const FieldJets& u, double beta) { return u.dt + beta * u.dx; }
inline double burgers_residual(const FieldJets& u, double nu) { return u.dt + u.v * u.dx - nu * u.dxx; }

struct NsResidual {
  double mx = 0, my = 0, cont = 0;
};

inline NsResidual ns_residual(const FieldJets& u, const FieldJets& v, const FieldJets& p, double re, bool steady) {
  NsResidual r;
  double inv_re = 1.0 / re;
  r.mx = (steady ? 0.0 : u.dt) + u.v * u.dx + v.v * u.dy + p.dx - inv_re * (u.dxx + u.dyy);
  r.my = (steady ? 0.0 : v.dt) + u.v * v.dx + v.v * v.dy + p.dy - inv_re * (v.dxx + v.dyy);
  r.cont = u.dx + v.dy;
  return r;
}

// closed forms, templated so Jet2 coordinates flow through

template <class T>
void kovasznay_solution(const T& x, const T& y, double re, T* u, T* v, T* p) {
  using std::cos, std::exp, std::sin;
  double eta = 0.5 * re - std::sqrt(0.25 * re * re + 4.0 * pi * pi);
  T ex = exp(eta * x);
  *u = 1.0 - ex * cos(2.0 * pi * y);
  *v = (eta / (2.0 * pi)) * ex * sin(2.0 * pi * y);
  *p = 0.5 * (1.0 - exp(2.0 * eta * x));
}

template <class T>
void beltrami_solution(const T& x, const T& y, const T& t, double re, T* u, T* v, T* p) {
  using std::cos, std::exp, std::sin;
  double nu = 1.0 / re;
  T decay = exp(-2.0 * pi * pi * nu * t);
  *u = -cos(pi * x) * sin(pi * y) * decay;
  *v = sin(pi * x) * cos(pi * y) * decay;
  *p = -0.25 * (cos(2.0 * pi * x) + cos(2.0 * pi * y)) * decay * decay;
}

inline double kovasznay_eta(double re) { return 0.5 * re - std::sqrt(0.25 * re * re + 4.0 * pi * pi); }

// single-mode viscous burgers solution (cole-hopf of phi = 2 + e^{-4 pi^2 nu t} cos 2 pi x)
template <class T>
T burgers_cole_hopf(const T& x, const T& t, double nu) {
  using std::cos, std::exp, std::sin;
  double k = 4.0 * pi * pi * nu;
  T decay = exp(-k * t);
  return 4.0 * pi * nu * decay * sin(2.0 * pi * x) / (2.0 + decay * cos(2.0 * pi * x));
}

// jet bundle builders: evaluate f one seeded direction at a time

// f(x, t) -> scalar over a 1d space-time problem; second order in x, first in t
template <class F>
FieldJets jets_xt(F&& f, double x, double t) {
  FieldJets j;
  Jet2 a = f(Jet2::variable(x), Jet2(t));
  j.v = a.v;
  j.dx = a.d1;
  j.dxx = a.d2;
  Jet2 b = f(Jet2(x), Jet2::variable(t));
  j.dt = b.d1;
  return j;
}

// f(x, y, t) -> scalar; second order in x and y, first in t (ignored when steady)
template <class F>
FieldJets jets_xyt(F&& f, double x, double y, double t, bool steady) {
  FieldJets j;
  Jet2 a = f(Jet2::variable(x), Jet2(y), Jet2(t));
  j.v = a.v;
  j.dx = a.d1;
  j.dxx = a.d2;
  Jet2 b = f(Jet2(x), Jet2::variable(y), Jet2(t));
  j.dy = b.d1;
  j.dyy = b.d2;
  if (!steady) j.dt = f(Jet2(x), Jet2(y), Jet2::variable(t)).d1;
  return j;
}

// engine-node residuals over per-field forward outputs carrying jet planes;
// direction indices follow problem.jet_seeds order

template <class E>
std::vector<typename E::V> residual_nodes(E& e, const PdeProblem& p, const std::vector<typename E::V>& fields,
                                          double condition_re = 0.0) {
  using V = typename E::V;
  if (static_cast<int>(fields.size()) != p.field_count) throw std::runtime_error("residual_nodes: field count mismatch");
  if (p.name == "advection" || p.name == "toy_const") {
    V ut = e.extract(fields[0], 1, 1);
    if (p.name == "toy_const") return {ut};
    return {e.add(ut, e.scale(e.extract(fields[0], 0, 1), p.beta))};
  }
  if (p.name == "burgers") {
    V u = e.values(fields[0]);
    V ut = e.extract(fields[0], 1, 1);
    V ux = e.extract(fields[0], 0, 1);
    V uxx = e.extract(fields[0], 0, 2);
    return {e.add(ut, e.sub(e.cmul(u, ux), e.scale(uxx, p.nu)))};
  }
  if (p.name == "kovasznay" || p.name == "beltrami" || p.name == "lid_cavity") {
    double re = p.name == "lid_cavity" ? p.re : condition_re;
    if (re <= 0) throw std::runtime_error("residual_nodes: reynolds number required");
    double inv_re = 1.0 / re;
    V u = e.values(fields[0]), v = e.values(fields[1]);
    V ux = e.extract(fields[0], 0, 1), uy = e.extract(fields[0], 1, 1);
    V vx = e.extract(fields[1], 0, 1), vy = e.extract(fields[1], 1, 1);
    V px = e.extract(fields[2], 0, 1), py = e.extract(fields[2], 1, 1);
    V lap_u = e.add(e.extract(fields[0], 0, 2), e.extract(fields[0], 1, 2));
    V lap_v = e.add(e.extract(fields[1], 0, 2), e.extract(fields[1], 1, 2));
    V mx = e.sub(e.add(e.add(e.cmul(u, ux), e.cmul(v, uy)), px), e.scale(lap_u, inv_re));
    V my = e.sub(e.add(e.add(e.cmul(u, vx), e.cmul(v, vy)), py), e.scale(lap_v, inv_re));
    if (!p.steady) {
      mx = e.add(mx, e.extract(fields[0], 2, 1));
      my = e.add(my, e.extract(fields[1], 2, 1));
    }
    return {mx, my, e.add(ux, vy)};
  }
  throw std::runtime_error("residual_nodes: unknown problem " + p.name);
}

}  // namespace pinto
