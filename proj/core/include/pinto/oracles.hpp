#pragma once
// Reference solvers used for validation: exact transport, a periodic
// finite-difference burgers solver (crank-nicolson diffusion + explicit
// two-step conservative advection), and a steady lid-driven cavity solver in
// vorticity-streamfunction form.

#include <cmath>
#include <functional>

#include "pinto/conditions.hpp"
#include "pinto/problems.hpp"
#include "pinto/reference_field.hpp"

namespace pinto {

// periodic transport of the initial profile
template <class F>
double advection_exact(double x, double t, F&& u0, double beta, double domain = 1.0) {
  double s = std::fmod(x - beta * t, domain);
  if (s < 0) s += domain;
  return u0(s);
}

// periodic viscous burgers on [0,1): nx cells, nt_out output slices over
// [0, t_end]; internal substeps respect the advective cfl bound
ReferenceField burgers_fd_solve(const std::function<double(double)>& u0, double nu, double t_end, int nx, int nt_out);

// linear transport at constant speed via first-order upwinding; same layout
ReferenceField transport_fd_solve(const std::function<double(double)>& u0, double beta, double t_end, int nx, int nt_out);

// combined analytic stokes scraping flow of the two lid corners at unit lid
// speed: streamfunction, vorticity, velocity, and the gradient entries the
// cavity solver needs for its singularity-subtracted remainder formulation
struct CornerFlow {
  double psi = 0, omega = 0, u = 0, v = 0;
  double uy = 0, vx = 0;  // du/dy, dv/dx
  double wx = 0, wy = 0;  // grad omega
};
CornerFlow corner_flow(double x, double y);

struct LidSolveStats {
  int iterations = 0;
  double defect = 0.0;  // final scaled equation defect
};

// steady cavity at the given reynolds number on an n x n node grid;
// converged when the scaled poisson and vorticity defects drop below 1e-8
ReferenceField lid_cavity_solve(double lid_velocity, double re, int n, LidSolveStats* stats = nullptr);

struct GridSpec {
  std::vector<int> sizes;                          // nodes per axis
  std::vector<std::pair<double, double>> extents;  // empty -> problem bounds
};

// validation field for (problem, condition) on the requested grid
ReferenceField oracle_field(const PdeProblem& p, const Condition& c, const GridSpec& grid);

}  // namespace pinto
