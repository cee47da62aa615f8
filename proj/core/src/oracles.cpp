#include "pinto/oracles.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace pinto {

namespace {

// cyclic tridiagonal solve for (b on diagonal, a on both off-diagonals and the
// periodic corners) via sherman-morrison around the plain thomas algorithm
void cyclic_thomas(double a, double b, std::vector<double>* rhs) {
  auto& d = *rhs;
  size_t n = d.size();
  double gamma = -b;
  std::vector<double> diag(n, b), u(n, 0.0);
  diag[0] = b - gamma;
  diag[n - 1] = b - a * a / gamma;
  u[0] = gamma;
  u[n - 1] = a;
  auto thomas = [&](std::vector<double>& x) {
    std::vector<double> c(n);
    c[0] = a / diag[0];
    x[0] /= diag[0];
    for (size_t i = 1; i < n; ++i) {
      double m = diag[i] - a * c[i - 1];
      c[i] = a / m;
      x[i] = (x[i] - a * x[i - 1]) / m;
    }
    for (size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  };
  std::vector<double> z = u;
  thomas(d);
  thomas(z);
  double fact = (d[0] + a * d[n - 1] / gamma) / (1.0 + z[0] + a * z[n - 1] / gamma);
  for (size_t i = 0; i < n; ++i) d[i] -= fact * z[i];
}

ReferenceField fd_periodic_solve(const std::function<double(double)>& u0, double nu, double beta, bool linear_flux,
                                 double t_end, int nx, int nt_out) {
  if (nx < 8) throw std::runtime_error("fd solver: nx must be >= 8");
  if (nt_out < 2) throw std::runtime_error("fd solver: nt_out must be >= 2");
  if (t_end <= 0) throw std::runtime_error("fd solver: t_end must be positive");
  double dx = 1.0 / nx;
  std::vector<double> u(static_cast<size_t>(nx)), up;  // current and previous states
  for (int i = 0; i < nx; ++i) u[static_cast<size_t>(i)] = u0(i * dx);

  ReferenceField f;
  f.provenance = "fd-oracle";
  f.axis_names = {"t", "x"};
  f.axes.resize(2);
  for (int j = 0; j < nt_out; ++j) f.axes[0].push_back(t_end * j / (nt_out - 1));
  for (int i = 0; i < nx; ++i) f.axes[1].push_back(i * dx);
  f.field_names = {"u"};
  f.values.resize(static_cast<long>(nt_out) * nx, 1);

  auto emit = [&](int slice) {
    for (int i = 0; i < nx; ++i) f.values(static_cast<long>(slice) * nx + i, 0) = u[static_cast<size_t>(i)];
  };
  emit(0);

  // - (dF/dx) with F = u^2/2 (centered) or beta*u (upwind)
  auto advect = [&](const std::vector<double>& w, std::vector<double>* out) {
    auto& r = *out;
    for (int i = 0; i < nx; ++i) {
      auto l = static_cast<size_t>((i + nx - 1) % nx);
      auto rr = static_cast<size_t>((i + 1) % nx);
      auto c = static_cast<size_t>(i);
      if (linear_flux)
        r[c] = beta >= 0 ? -beta * (w[c] - w[l]) / dx : -beta * (w[rr] - w[c]) / dx;
      else
        r[c] = -(w[rr] * w[rr] - w[l] * w[l]) / (4.0 * dx);
    }
  };

  std::vector<double> n_now(static_cast<size_t>(nx)), n_prev(static_cast<size_t>(nx)), rhs(static_cast<size_t>(nx));
  const double cfl = linear_flux ? 0.9 : 0.4;

  for (int slice = 1; slice < nt_out; ++slice) {
    double t0 = f.axes[0][static_cast<size_t>(slice - 1)];
    double t1 = f.axes[0][static_cast<size_t>(slice)];
    // fixed substep per interval keeps the two-step advection second order;
    // max|u| cannot grow for these fluxes, so the start-of-interval bound holds
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(linear_flux ? beta : v));
    double dt_stable = umax > 0 ? cfl * dx / umax : 0.5 * dx;
    dt_stable = std::min(dt_stable, 0.5 * dx);
    if (!std::isfinite(dt_stable) || dt_stable <= 0) {
      std::ostringstream msg;
      msg << "fd solver: state blew up at t=" << t0 << "; advective step bound dt <= " << cfl << "*dx/max|u| is unusable";
      throw std::runtime_error(msg.str());
    }
    double need = (t1 - t0) / dt_stable;
    if (need > 1e9) {
      std::ostringstream msg;
      msg << "fd solver: state blew up at t=" << t0 << "; advective step bound dt <= " << cfl
          << "*dx/max|u| would need " << need << " substeps per output interval";
      throw std::runtime_error(msg.str());
    }
    long steps = std::max(1L, static_cast<long>(std::ceil(need - 1e-12)));
    double dt = (t1 - t0) / static_cast<double>(steps);
    double alpha = nu * dt / (2.0 * dx * dx);
    bool have_prev = false;  // one startup euler substep per interval
    for (long s = 0; s < steps; ++s) {
      advect(u, &n_now);
      for (int i = 0; i < nx; ++i) {
        auto l = static_cast<size_t>((i + nx - 1) % nx);
        auto rr = static_cast<size_t>((i + 1) % nx);
        auto c = static_cast<size_t>(i);
        double adv = have_prev ? 1.5 * n_now[c] - 0.5 * n_prev[c] : n_now[c];
        rhs[c] = u[c] + dt * adv + alpha * (u[l] - 2.0 * u[c] + u[rr]);
      }
      if (alpha > 0) cyclic_thomas(-alpha, 1.0 + 2.0 * alpha, &rhs);
      n_prev = n_now;
      have_prev = true;
      u = rhs;
      for (double v : u)
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << "fd solver: non-finite state at t=" << t0 + dt * (s + 1.0) << "; violated advective step bound dt <= "
              << cfl << "*dx/max|u|";
          throw std::runtime_error(msg.str());
        }
    }
    emit(slice);
  }
  return f;
}

}  // namespace

ReferenceField burgers_fd_solve(const std::function<double(double)>& u0, double nu, double t_end, int nx, int nt_out) {
  return fd_periodic_solve(u0, nu, 0.0, false, t_end, nx, nt_out);
}

ReferenceField transport_fd_solve(const std::function<double(double)>& u0, double beta, double t_end, int nx, int nt_out) {
  return fd_periodic_solve(u0, 0.0, beta, true, t_end, nx, nt_out);
}

CornerFlow corner_flow(double x, double y) {
  // stokes scraping flow psi = r f(theta) at a lid corner, unit lid speed;
  // f(0) = 0, f'(0) = 1, f(pi/2) = f'(pi/2) = 0 on the side wall
  static const double A = pi * pi / (pi * pi - 4.0);
  CornerFlow s{};
  // corner positions (0,1) and (1,1); local frame: a along the lid into the
  // domain, b downward, theta measured from the lid
  for (int corner = 0; corner < 2; ++corner) {
    double a = corner == 0 ? x : 1.0 - x;
    double b = 1.0 - y;
    double r = std::hypot(a, b);
    if (r == 0.0) continue;  // wall values at the singular corner are never used
    double ct = a / r, st = b / r;
    double th = std::atan2(b, a);
    double f = A * (st - (2.0 / pi) * th * st - (4.0 / (pi * pi)) * th * ct);
    double fp = A * (ct - (2.0 / pi) * (st + th * ct) - (4.0 / (pi * pi)) * (ct - th * st));
    double F = (4.0 * A / pi) * ((2.0 / pi) * st - ct);
    double Fp = (4.0 * A / pi) * ((2.0 / pi) * ct + st);
    double g1 = fp * ct + f * st, g2 = fp * st - f * ct;
    double wa = (-Fp * st - F * ct) / (r * r), wb = (Fp * ct - F * st) / (r * r);
    // both corners share psi, omega, u and the velocity-gradient entries;
    // v and d(omega)/dx mirror across the vertical midline
    double mir = corner == 0 ? 1.0 : -1.0;
    s.psi += -r * f;
    s.omega += F / r;
    s.u += g1;
    s.v += -mir * g2;
    s.uy += -F * ct * ct / r;
    s.vx += F * st * st / r;
    s.wx += mir * wa;
    s.wy += -wb;
  }
  return s;
}

ReferenceField lid_cavity_solve(double lid_velocity, double re, int n, LidSolveStats* stats) {
  if (n < 16) throw std::runtime_error("lid_cavity_solve: n must be >= 16");
  if (re <= 0) throw std::runtime_error("lid_cavity_solve: re must be positive");
  const double h = 1.0 / (n - 1);
  const double h2 = h * h;
  auto at = [n](int i, int j) { return static_cast<size_t>(j) * n + i; };  // i along x, j along y

  // the lid corners are stokes-singular; solve for the smooth remainder after
  // subtracting the analytic scraping flow of both corners, then add it back
  const double U = lid_velocity;
  std::vector<double> psi(static_cast<size_t>(n) * n, 0.0), omg(psi), u(psi), v(psi);
  std::vector<double> us(psi), vs(psi), fqx(psi), fqy(psi);
  double us_max = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      CornerFlow s = corner_flow(i * h, j * h);
      us[at(i, j)] = U * s.u;
      vs[at(i, j)] = U * s.v;
      fqx[at(i, j)] = U * s.wx;  // grad of the singular vorticity, for the forcing
      fqy[at(i, j)] = U * s.wy;
      us_max = std::max(us_max, std::max(std::abs(us[at(i, j)]), std::abs(vs[at(i, j)])));
      bool wall = i == 0 || i == n - 1 || j == 0 || j == n - 1;
      if (wall) psi[at(i, j)] = -U * s.psi;  // remainder dirichlet: total psi = 0 on walls
    }

  // remainder wall data for the thom vorticity condition
  std::vector<double> ut_top(static_cast<size_t>(n)), ut_bot(static_cast<size_t>(n)), vx_bot(static_cast<size_t>(n));
  std::vector<double> vt_left(static_cast<size_t>(n)), vt_right(static_cast<size_t>(n));
  std::vector<double> uy_left(static_cast<size_t>(n)), uy_right(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    CornerFlow top = corner_flow(i * h, 1.0), bot = corner_flow(i * h, 0.0);
    ut_top[static_cast<size_t>(i)] = U - U * top.u;
    ut_bot[static_cast<size_t>(i)] = -U * bot.u;
    vx_bot[static_cast<size_t>(i)] = -U * bot.vx;
  }
  for (int j = 0; j < n; ++j) {
    CornerFlow lft = corner_flow(0.0, j * h), rgt = corner_flow(1.0, j * h);
    vt_left[static_cast<size_t>(j)] = -U * lft.v;
    vt_right[static_cast<size_t>(j)] = -U * rgt.v;
    uy_left[static_cast<size_t>(j)] = -U * lft.uy;
    uy_right[static_cast<size_t>(j)] = -U * rgt.uy;
  }

  const double scale = std::max(std::abs(lid_velocity), 1e-30);
  const double sor_w = 2.0 / (1.0 + std::sin(pi * h));
  const double vmax = std::max(std::abs(lid_velocity), 1.0) + us_max;
  const double dtau = 0.8 * std::min(0.25 * h2 * re, h / vmax);
  const double tol = 1e-8;
  const long max_outer = 4000000;

  double defect = 0.0;
  long it = 0;
  for (; it < max_outer; ++it) {
    // a few streamfunction sweeps per outer step keep the systems in lockstep
    for (int sweep = 0; sweep < 3; ++sweep)
      for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
          double s = psi[at(i - 1, j)] + psi[at(i + 1, j)] + psi[at(i, j - 1)] + psi[at(i, j + 1)];
          double gs = 0.25 * (s + h2 * omg[at(i, j)]);
          psi[at(i, j)] += sor_w * (gs - psi[at(i, j)]);
        }

    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        u[at(i, j)] = (psi[at(i, j + 1)] - psi[at(i, j - 1)]) / (2.0 * h) + us[at(i, j)];
        v[at(i, j)] = -(psi[at(i + 1, j)] - psi[at(i - 1, j)]) / (2.0 * h) + vs[at(i, j)];
      }

    // thom condition on the remainder; the wall terms carry the subtracted
    // tangential velocity and its analytic wall gradients
    for (int i = 1; i < n - 1; ++i) {
      auto k = static_cast<size_t>(i);
      omg[at(i, 0)] = 2.0 * (psi[at(i, 0)] + h * ut_bot[k] - psi[at(i, 1)]) / h2 + vx_bot[k];
      omg[at(i, n - 1)] = 2.0 * (psi[at(i, n - 1)] - h * ut_top[k] - psi[at(i, n - 2)]) / h2;
    }
    for (int j = 1; j < n - 1; ++j) {
      auto k = static_cast<size_t>(j);
      omg[at(0, j)] = 2.0 * (psi[at(0, j)] - h * vt_left[k] - psi[at(1, j)]) / h2 - uy_left[k];
      omg[at(n - 1, j)] = 2.0 * (psi[at(n - 1, j)] + h * vt_right[k] - psi[at(n - 2, j)]) / h2 - uy_right[k];
    }

    double dv_max = 0.0;
    std::vector<double> rhsv(static_cast<size_t>(n) * n, 0.0);
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        double lap = (omg[at(i - 1, j)] + omg[at(i + 1, j)] + omg[at(i, j - 1)] + omg[at(i, j + 1)] - 4.0 * omg[at(i, j)]) / h2;
        double cx = (omg[at(i + 1, j)] - omg[at(i - 1, j)]) / (2.0 * h);
        double cy = (omg[at(i, j + 1)] - omg[at(i, j - 1)]) / (2.0 * h);
        double force = -(u[at(i, j)] * fqx[at(i, j)] + v[at(i, j)] * fqy[at(i, j)]);
        double r = lap / re - u[at(i, j)] * cx - v[at(i, j)] * cy + force;
        rhsv[at(i, j)] = r;
        dv_max = std::max(dv_max, std::abs(r));
      }
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) omg[at(i, j)] += dtau * rhsv[at(i, j)];

    if (it % 100 == 99 || dv_max * h2 * re <= tol * scale) {
      double dp_max = 0.0;
      for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
          double lp = psi[at(i - 1, j)] + psi[at(i + 1, j)] + psi[at(i, j - 1)] + psi[at(i, j + 1)] - 4.0 * psi[at(i, j)];
          dp_max = std::max(dp_max, std::abs(lp + h2 * omg[at(i, j)]));
        }
      defect = std::max(dp_max, dv_max * h2 * re) / scale;
      if (defect <= tol) break;
    }
  }
  if (it >= max_outer) throw std::runtime_error("lid_cavity_solve: no convergence within the iteration cap");
  if (stats) {
    stats->iterations = static_cast<int>(it + 1);
    stats->defect = defect;
  }

  // boundary velocities are the prescribed walls
  for (int i = 0; i < n; ++i) {
    u[at(i, n - 1)] = lid_velocity;
    v[at(i, n - 1)] = 0.0;
    u[at(i, 0)] = v[at(i, 0)] = 0.0;
  }
  for (int j = 0; j < n - 1; ++j) {
    u[at(0, j)] = v[at(0, j)] = 0.0;
    u[at(n - 1, j)] = v[at(n - 1, j)] = 0.0;
  }

  ReferenceField f;
  f.provenance = "fv-oracle";
  f.axis_names = {"x", "y"};
  f.axes.resize(2);
  for (int i = 0; i < n; ++i) f.axes[0].push_back(i * h);
  f.axes[1] = f.axes[0];
  f.field_names = {"u", "v"};
  f.values.resize(static_cast<long>(n) * n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long row = static_cast<long>(i) * n + j;  // x outer, y inner
      f.values(row, 0) = u[at(i, j)];
      f.values(row, 1) = v[at(i, j)];
    }
  return f;
}

ReferenceField oracle_field(const PdeProblem& p, const Condition& c, const GridSpec& grid) {
  if (static_cast<int>(grid.sizes.size()) != p.coord_dim) throw std::runtime_error("oracle_field: grid rank mismatch");
  for (int s : grid.sizes)
    if (s < 2) throw std::runtime_error("oracle_field: each axis needs at least 2 nodes");
  auto extents = grid.extents.empty() ? p.bounds : grid.extents;

  if (p.name == "advection" || p.name == "burgers" || p.name == "toy_const") {
    int nx = grid.sizes[0], nt = grid.sizes[1];
    double t_end = extents[1].second;
    if (p.name == "burgers") {
      // solver grid directly; resolution chosen well above the query grid
      int solver_nx = std::max(1024, nx);
      auto u0 = [&c](double x) { return c.grf(x); };
      ReferenceField fine = burgers_fd_solve(u0, p.nu, t_end, solver_nx, std::max(129, nt));
      ReferenceField f;
      f.provenance = "fd-oracle";
      f.axis_names = {"x", "t"};
      f.axes.resize(2);
      for (int i = 0; i < nx; ++i) f.axes[0].push_back(extents[0].first + (extents[0].second - extents[0].first) * i / (nx - 1.0));
      for (int j = 0; j < nt; ++j) f.axes[1].push_back(extents[1].first + (t_end - extents[1].first) * j / (nt - 1.0));
      f.field_names = {"u"};
      f.values.resize(static_cast<long>(nx) * nt, 1);
      double dxs = 1.0 / solver_nx;
      double last = 1.0 - dxs;
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nt; ++j) {
          double x = f.axes[0][static_cast<size_t>(i)];
          double tq = f.axes[1][static_cast<size_t>(j)];
          // the solver grid omits the duplicate periodic node at x=1; wrap the
          // last cell by hand
          double xs = x - std::floor(x);
          double val;
          if (xs > last) {
            double w = (xs - last) / dxs;
            val = (1.0 - w) * fine.sample({tq, last}, 0) + w * fine.sample({tq, 0.0}, 0);
          } else {
            val = fine.sample({tq, xs}, 0);
          }
          f.values(static_cast<long>(i) * nt + j, 0) = val;
        }
      return f;
    }
    ReferenceField f;
    f.provenance = "analytic";
    f.axis_names = {"x", "t"};
    f.axes.resize(2);
    for (int i = 0; i < nx; ++i) f.axes[0].push_back(extents[0].first + (extents[0].second - extents[0].first) * i / (nx - 1.0));
    for (int j = 0; j < nt; ++j) f.axes[1].push_back(extents[1].first + (extents[1].second - extents[1].first) * j / (nt - 1.0));
    f.field_names = {"u"};
    f.values.resize(static_cast<long>(nx) * nt, 1);
    double beta = p.name == "toy_const" ? 0.0 : p.beta;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nt; ++j)
        f.values(static_cast<long>(i) * nt + j, 0) =
            advection_exact(f.axes[0][static_cast<size_t>(i)], f.axes[1][static_cast<size_t>(j)],
                            [&c](double s) { return c.ic(s); }, beta);
    return f;
  }

  if (p.name == "kovasznay" || p.name == "beltrami") {
    ReferenceField f;
    f.provenance = "analytic";
    f.axes.resize(static_cast<size_t>(p.coord_dim));
    f.axis_names = p.coord_dim == 3 ? std::vector<std::string>{"x", "y", "t"} : std::vector<std::string>{"x", "y"};
    for (int d = 0; d < p.coord_dim; ++d)
      for (int i = 0; i < grid.sizes[static_cast<size_t>(d)]; ++i)
        f.axes[static_cast<size_t>(d)].push_back(extents[static_cast<size_t>(d)].first +
                                                 (extents[static_cast<size_t>(d)].second - extents[static_cast<size_t>(d)].first) * i /
                                                     (grid.sizes[static_cast<size_t>(d)] - 1.0));
    f.field_names = {"u", "v", "p"};
    f.values.resize(f.node_count(), 3);
    for (long r = 0; r < f.node_count(); ++r) {
      auto x = f.node_coords(r);
      double u, v, q;
      if (p.name == "kovasznay") kovasznay_solution(x[0], x[1], c.value, &u, &v, &q);
      else beltrami_solution(x[0], x[1], x[2], c.value, &u, &v, &q);
      f.values(r, 0) = u;
      f.values(r, 1) = v;
      f.values(r, 2) = q;
    }
    return f;
  }

  if (p.name == "lid_cavity") {
    if (grid.sizes[0] != grid.sizes[1]) throw std::runtime_error("oracle_field: lid cavity grid must be square");
    return lid_cavity_solve(c.value, p.re, grid.sizes[0]);
  }

  throw std::runtime_error("oracle_field: no oracle for " + p.name);
}

}  // namespace pinto
