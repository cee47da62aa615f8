#pragma once
// Condition families (initial/boundary functions per benchmark), boundary
// token sequences for the operator input, and collocation/boundary point sets
// for the physics loss. Everything is deterministic per seed.

#include <cstdint>
#include <string>
#include <vector>

#include "pinto/batch.hpp"
#include "pinto/problems.hpp"
#include "pinto/rng.hpp"

namespace pinto {

// superposition of n sinusoidal waves with integer wavenumbers
struct SinusoidalIc {
  std::vector<double> a, omega, phi;
  template <class T>
  T operator()(const T& x) const {
    using std::sin;
    T s(0.0);
    for (size_t i = 0; i < a.size(); ++i) s = s + a[i] * sin(omega[i] * x + phi[i]);
    return s;
  }
};

// wavenumbers are integers in [1, n_max] so u0 is periodic on [0, domain_size]
SinusoidalIc sinusoidal_ic(std::uint64_t seed, int index, int n_waves, int n_max, double domain_size);

// zero-mean periodic gaussian random field on [0,1]; truncated fourier series
// with variance 625/((2 pi k)^2 + 25)^2 per complex mode pair
struct GrfIc {
  std::vector<double> ca, sa;  // scaled cos/sin coefficients, k = 1..K
  template <class T>
  T operator()(const T& x) const {
    using std::cos, std::sin;
    T s(0.0);
    for (size_t k = 0; k < ca.size(); ++k) {
      double w = 2.0 * pi * static_cast<double>(k + 1);
      s = s + ca[k] * cos(w * x) + sa[k] * sin(w * x);
    }
    return s;
  }
  // pointwise variance of the truncated family
  double family_variance() const;
};

// grid_n must be a power of two; modes k = 1..grid_n/2 - 1 are sampled
GrfIc grf_ic(std::uint64_t seed, int index, int grid_n);

struct Condition {
  std::string problem;
  int index = 0;
  bool seen = true;
  SinusoidalIc wave;  // advection / toy_const
  GrfIc grf;          // burgers
  double value = 0;   // reynolds number (kovasznay/beltrami) or lid speed

  double ic(double x) const;  // initial profile, advection/burgers families only
};

struct FamilyConfig {
  std::uint64_t seed = 1;
  int seen_count = 0, unseen_count = 0;          // sampled ic families
  int wave_n = 2, wave_n_max = 4;                // sinusoidal superposition
  int grf_grid = 256;                            // burgers grf resolution
  std::vector<double> seen_values, unseen_values;  // reynolds numbers / lid speeds
};

struct ConditionSet {
  std::vector<Condition> seen, unseen;
};

ConditionSet make_conditions(const PdeProblem& p, const FamilyConfig& f);

// operator input tokens: coordinates on the initial/boundary manifold plus the
// known solution values there
struct BoundarySequence {
  Matrix coords;  // L x coord_dim
  Matrix values;  // L x value_dim
  int condition_index = 0;
};

// token positions depend only on (problem, L, seed); values on the condition
BoundarySequence boundary_sequence(const PdeProblem& p, const Condition& c, int L, std::uint64_t seed);

// physics-loss point sets
struct ValueTarget {
  std::vector<double> x;
  std::vector<double> b;     // one entry per constrained field
  std::vector<int> fields;   // model output indices the entries apply to
  double weight = 1.0;
};

struct PeriodicPair {
  std::vector<double> xa, xb;
  std::vector<int> fields;
  double weight = 1.0;
};

struct CollocationSet {
  Matrix interior;  // n_c x coord_dim, strictly inside the domain
  std::vector<ValueTarget> targets;
  std::vector<PeriodicPair> pairs;  // targets.size() + pairs.size() == n_ib
};

CollocationSet sample_collocation(const PdeProblem& p, const Condition& c, int n_c, int n_ib, std::uint64_t seed);

}  // namespace pinto
