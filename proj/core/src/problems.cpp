#include "pinto/problems.hpp"

namespace pinto {

PdeProblem make_problem(const std::string& name, double beta, double nu, double re) {
  PdeProblem p;
  p.name = name;
  p.beta = beta;
  p.nu = nu;
  p.re = re;
  if (name == "advection" || name == "toy_const") {
    p.coord_dim = 2;
    p.field_count = 1;
    p.bounds = {{0, 1}, {0, 1}};
    p.jet_seeds = {{0, 1}, {1, 1}};
  } else if (name == "burgers") {
    p.coord_dim = 2;
    p.field_count = 1;
    p.bounds = {{0, 1}, {0, 1}};
    p.jet_seeds = {{0, 2}, {1, 1}};
  } else if (name == "kovasznay") {
    p.coord_dim = 2;
    p.field_count = 3;
    p.steady = true;
    p.bounds = {{-0.5, 1.0}, {-0.5, 1.5}};
    p.jet_seeds = {{0, 2}, {1, 2}};
  } else if (name == "beltrami") {
    p.coord_dim = 3;
    p.field_count = 3;
    p.bounds = {{-1, 1}, {-1, 1}, {0, 2}};
    p.jet_seeds = {{0, 2}, {1, 2}, {2, 1}};
  } else if (name == "lid_cavity") {
    p.coord_dim = 2;
    p.field_count = 3;
    p.steady = true;
    p.bounds = {{0, 1}, {0, 1}};
    p.jet_seeds = {{0, 2}, {1, 2}};
  } else {
    throw std::runtime_error("unknown problem: " + name);
  }
  return p;
}

}  // namespace pinto
