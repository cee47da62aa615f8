#include "pinto/conditions.hpp"

#include <algorithm>
#include <stdexcept>

namespace pinto {

SinusoidalIc sinusoidal_ic(std::uint64_t seed, int index, int n_waves, int n_max, double domain_size) {
  if (n_waves < 1 || n_max < 1) throw std::runtime_error("sinusoidal_ic: need n_waves >= 1 and n_max >= 1");
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(index));
  SinusoidalIc ic;
  for (int i = 0; i < n_waves; ++i) {
    auto n = static_cast<double>(rng.uniform_int(1, n_max));
    ic.omega.push_back(2.0 * pi * n / domain_size);
    ic.a.push_back(rng.uniform());
    ic.phi.push_back(rng.uniform_open(0.0, 2.0 * pi));
  }
  return ic;
}

namespace {

double grf_sqrt_eig(int k) {
  double w2 = 2.0 * pi * static_cast<double>(k);
  return 25.0 / (w2 * w2 + 25.0);  // sqrt of 625/((2 pi k)^2 + 25)^2
}

}  // namespace

double GrfIc::family_variance() const {
  double s = 0.0;
  for (size_t k = 0; k < ca.size(); ++k) {
    double r = grf_sqrt_eig(static_cast<int>(k + 1));
    s += 2.0 * r * r;
  }
  return s;
}

GrfIc grf_ic(std::uint64_t seed, int index, int grid_n) {
  if (grid_n < 4 || (grid_n & (grid_n - 1)) != 0) throw std::runtime_error("grf_ic: grid size must be a power of two >= 4");
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(index));
  GrfIc ic;
  int K = grid_n / 2 - 1;
  for (int k = 1; k <= K; ++k) {
    // orthonormal basis {sqrt2 cos, sqrt2 sin} with eigenvalue lambda_k per mode
    double amp = std::sqrt(2.0) * grf_sqrt_eig(k);
    ic.ca.push_back(amp * rng.normal());
    ic.sa.push_back(amp * rng.normal());
  }
  return ic;
}

double Condition::ic(double x) const {
  if (problem == "advection") return wave(x);
  if (problem == "burgers") return grf(x);
  if (problem == "toy_const") return value;
  throw std::runtime_error("condition has no initial profile: " + problem);
}

ConditionSet make_conditions(const PdeProblem& p, const FamilyConfig& f) {
  ConditionSet set;
  auto push = [&](bool seen, int index) {
    Condition c;
    c.problem = p.name;
    c.index = index;
    c.seen = seen;
    if (p.name == "advection") {
      c.wave = sinusoidal_ic(f.seed, index, f.wave_n, f.wave_n_max, p.bounds[0].second - p.bounds[0].first);
    } else if (p.name == "burgers") {
      c.grf = grf_ic(f.seed, index, f.grf_grid);
    } else if (p.name == "toy_const") {
      c.value = Rng(f.seed).fork(static_cast<std::uint64_t>(index)).uniform(-1.0, 1.0);
    } else {
      const auto& vals = seen ? f.seen_values : f.unseen_values;
      int pos = seen ? index : index - static_cast<int>(f.seen_values.size());
      c.value = vals.at(static_cast<size_t>(pos));
    }
    (seen ? set.seen : set.unseen).push_back(std::move(c));
  };

  if (p.name == "advection" || p.name == "burgers" || p.name == "toy_const") {
    if (f.seen_count < 1) throw std::runtime_error("make_conditions: seen_count must be >= 1");
    for (int i = 0; i < f.seen_count; ++i) push(true, i);
    for (int i = 0; i < f.unseen_count; ++i) push(false, f.seen_count + i);
  } else {
    if (f.seen_values.empty()) throw std::runtime_error("make_conditions: seen_values required for " + p.name);
    for (size_t i = 0; i < f.seen_values.size(); ++i) push(true, static_cast<int>(i));
    for (size_t i = 0; i < f.unseen_values.size(); ++i) push(false, static_cast<int>(f.seen_values.size() + i));
  }
  return set;
}

namespace {

// rectangle perimeter walk: bottom (left to right), right (up), top (right to
// left), left (down); s in [0, perimeter)
void rect_point(const PdeProblem& p, double s, double* x, double* y) {
  double x0 = p.bounds[0].first, x1 = p.bounds[0].second;
  double y0 = p.bounds[1].first, y1 = p.bounds[1].second;
  double w = x1 - x0, h = y1 - y0;
  if (s < w) { *x = x0 + s; *y = y0; return; }
  s -= w;
  if (s < h) { *x = x1; *y = y0 + s; return; }
  s -= h;
  if (s < w) { *x = x1 - s; *y = y1; return; }
  s -= w;
  *x = x0; *y = y1 - s;
}

double rect_perimeter(const PdeProblem& p) {
  return 2.0 * (p.bounds[0].second - p.bounds[0].first + p.bounds[1].second - p.bounds[1].first);
}

void ns_values(const Condition& c, double x, double y, double t, double out[3]) {
  double u, v, p;
  if (c.problem == "kovasznay") kovasznay_solution(x, y, c.value, &u, &v, &p);
  else beltrami_solution(x, y, t, c.value, &u, &v, &p);
  out[0] = u; out[1] = v; out[2] = p;
}

// pooled beltrami boundary/initial points: 250 per spatial side over the full
// time span plus 500 points on the t=0 slab
Matrix beltrami_pool(const PdeProblem& p, Rng* rng) {
  const int per_side = 250, n_init = 500;
  Matrix pool(4 * per_side + n_init, 3);
  double x0 = p.bounds[0].first, x1 = p.bounds[0].second;
  double y0 = p.bounds[1].first, y1 = p.bounds[1].second;
  double t1 = p.bounds[2].second;
  int r = 0;
  for (int side = 0; side < 4; ++side)
    for (int i = 0; i < per_side; ++i, ++r) {
      double a = rng->uniform_open(0.0, 1.0), t = rng->uniform(0.0, t1);
      switch (side) {
        case 0: pool(r, 0) = x0 + a * (x1 - x0); pool(r, 1) = y0; break;
        case 1: pool(r, 0) = x1; pool(r, 1) = y0 + a * (y1 - y0); break;
        case 2: pool(r, 0) = x0 + a * (x1 - x0); pool(r, 1) = y1; break;
        default: pool(r, 0) = x0; pool(r, 1) = y0 + a * (y1 - y0); break;
      }
      pool(r, 2) = t;
    }
  for (int i = 0; i < n_init; ++i, ++r) {
    pool(r, 0) = rng->uniform_open(x0, x1);
    pool(r, 1) = rng->uniform_open(y0, y1);
    pool(r, 2) = 0.0;
  }
  return pool;
}

// lid walls in round-robin order: top (moving lid) first
void lid_wall_point(int wall, double a, double* x, double* y, bool* moving) {
  switch (wall) {
    case 0: *x = a; *y = 1.0; *moving = true; return;
    case 1: *x = a; *y = 0.0; break;
    case 2: *x = 0.0; *y = a; break;
    default: *x = 1.0; *y = a; break;
  }
  *moving = false;
}

}  // namespace

BoundarySequence boundary_sequence(const PdeProblem& p, const Condition& c, int L, std::uint64_t seed) {
  if (L < 1) throw std::runtime_error("boundary_sequence: L must be >= 1");
  Rng rng(seed);
  BoundarySequence s;
  s.condition_index = c.index;

  if (p.name == "advection" || p.name == "burgers" || p.name == "toy_const") {
    // tokens on the t=0 line; both periodic edges are always present
    std::vector<double> xs;
    xs.push_back(p.bounds[0].first);
    if (L >= 2) xs.push_back(p.bounds[0].second);
    for (int i = 2; i < L; ++i) xs.push_back(rng.uniform_open(p.bounds[0].first, p.bounds[0].second));
    std::sort(xs.begin(), xs.end());
    s.coords.resize(L, 2);
    s.values.resize(L, 1);
    for (int i = 0; i < L; ++i) {
      s.coords(i, 0) = xs[static_cast<size_t>(i)];
      s.coords(i, 1) = 0.0;
      s.values(i, 0) = c.ic(xs[static_cast<size_t>(i)]);
    }
    return s;
  }

  if (p.name == "kovasznay") {
    double perim = rect_perimeter(p);
    std::vector<double> arc(static_cast<size_t>(L));
    for (auto& a : arc) a = rng.uniform(0.0, perim);
    std::sort(arc.begin(), arc.end());
    s.coords.resize(L, 2);
    s.values.resize(L, 3);
    double out[3];
    for (int i = 0; i < L; ++i) {
      double x, y;
      rect_point(p, arc[static_cast<size_t>(i)], &x, &y);
      s.coords(i, 0) = x;
      s.coords(i, 1) = y;
      ns_values(c, x, y, 0.0, out);
      for (int f = 0; f < 3; ++f) s.values(i, f) = out[f];
    }
    return s;
  }

  if (p.name == "beltrami") {
    Matrix pool = beltrami_pool(p, &rng);
    if (L > pool.rows()) throw std::runtime_error("boundary_sequence: L exceeds the boundary pool");
    // partial fisher-yates draw without replacement
    std::vector<int> idx(static_cast<size_t>(pool.rows()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    for (int i = 0; i < L; ++i) {
      auto j = static_cast<size_t>(rng.uniform_int(i, static_cast<std::int64_t>(idx.size()) - 1));
      std::swap(idx[static_cast<size_t>(i)], idx[j]);
    }
    s.coords.resize(L, 3);
    s.values.resize(L, 3);
    double out[3];
    for (int i = 0; i < L; ++i) {
      auto r = idx[static_cast<size_t>(i)];
      s.coords.row(i) = pool.row(r);
      ns_values(c, pool(r, 0), pool(r, 1), pool(r, 2), out);
      for (int f = 0; f < 3; ++f) s.values(i, f) = out[f];
    }
    return s;
  }

  if (p.name == "lid_cavity") {
    s.coords.resize(L, 2);
    s.values.resize(L, 1);
    for (int i = 0; i < L; ++i) {
      double x, y;
      bool moving;
      lid_wall_point(i % 4, rng.uniform_open(0.0, 1.0), &x, &y, &moving);
      s.coords(i, 0) = x;
      s.coords(i, 1) = y;
      s.values(i, 0) = moving ? c.value : 0.0;
    }
    return s;
  }

  throw std::runtime_error("boundary_sequence: unknown problem " + p.name);
}

CollocationSet sample_collocation(const PdeProblem& p, const Condition& c, int n_c, int n_ib, std::uint64_t seed) {
  if (n_c < 1 || n_ib < 1) throw std::runtime_error("sample_collocation: counts must be >= 1");
  Rng rng(seed);
  CollocationSet set;
  set.interior.resize(n_c, p.coord_dim);
  for (int i = 0; i < n_c; ++i)
    for (int d = 0; d < p.coord_dim; ++d) set.interior(i, d) = rng.uniform_open(p.bounds[d].first, p.bounds[d].second);

  if (p.name == "advection" || p.name == "burgers" || p.name == "toy_const") {
    int n_pairs = p.name == "toy_const" ? 0 : n_ib / 5;
    int n_init = n_ib - n_pairs;
    for (int i = 0; i < n_init; ++i) {
      double x = rng.uniform_open(p.bounds[0].first, p.bounds[0].second);
      set.targets.push_back({{x, 0.0}, {c.ic(x)}, {0}, 1.0});
    }
    for (int i = 0; i < n_pairs; ++i) {
      double t = rng.uniform_open(p.bounds[1].first, p.bounds[1].second);
      set.pairs.push_back({{p.bounds[0].first, t}, {p.bounds[0].second, t}, {0}, 1.0});
    }
    return set;
  }

  if (p.name == "kovasznay") {
    double perim = rect_perimeter(p);
    double out[3];
    for (int i = 0; i < n_ib; ++i) {
      double x, y;
      rect_point(p, rng.uniform(0.0, perim), &x, &y);
      ns_values(c, x, y, 0.0, out);
      set.targets.push_back({{x, y}, {out[0], out[1], out[2]}, {0, 1, 2}, 1.0});
    }
    return set;
  }

  if (p.name == "beltrami") {
    // a third of the budget constrains the initial slab, the rest the walls
    int n_init = n_ib / 3;
    int n_bnd = n_ib - n_init;
    double x0 = p.bounds[0].first, x1 = p.bounds[0].second;
    double y0 = p.bounds[1].first, y1 = p.bounds[1].second;
    double out[3];
    for (int i = 0; i < n_bnd; ++i) {
      double a = rng.uniform_open(0.0, 1.0), t = rng.uniform(0.0, p.bounds[2].second);
      double x, y;
      switch (i % 4) {
        case 0: x = x0 + a * (x1 - x0); y = y0; break;
        case 1: x = x1; y = y0 + a * (y1 - y0); break;
        case 2: x = x0 + a * (x1 - x0); y = y1; break;
        default: x = x0; y = y0 + a * (y1 - y0); break;
      }
      ns_values(c, x, y, t, out);
      set.targets.push_back({{x, y, t}, {out[0], out[1], out[2]}, {0, 1, 2}, 1.0});
    }
    for (int i = 0; i < n_init; ++i) {
      double x = rng.uniform_open(x0, x1), y = rng.uniform_open(y0, y1);
      ns_values(c, x, y, 0.0, out);
      set.targets.push_back({{x, y, 0.0}, {out[0], out[1], out[2]}, {0, 1, 2}, 1.0});
    }
    return set;
  }

  if (p.name == "lid_cavity") {
    for (int i = 0; i < n_ib; ++i) {
      double x, y;
      bool moving;
      lid_wall_point(i % 4, rng.uniform_open(0.0, 1.0), &x, &y, &moving);
      double u = moving ? c.value : 0.0;
      // zero-valued wall constraints carry the heavy weight
      double w = u == 0.0 ? 100.0 : 1.0;
      set.targets.push_back({{x, y}, {u, 0.0}, {0, 1}, w});
    }
    return set;
  }

  throw std::runtime_error("sample_collocation: unknown problem " + p.name);
}

}  // namespace pinto
