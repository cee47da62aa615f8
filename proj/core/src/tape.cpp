#include <pinto/engine.hpp>

#include <cmath>

namespace pinto {

TapeEngine::V TapeEngine::push(Batch b, const char* tag,
                               std::function<void(TapeEngine&)> back) {
  val_.push_back(std::move(b));
  tag_.push_back(tag);
  bwd_.push_back(std::move(back));
  return static_cast<int>(val_.size()) - 1;
}

TapeEngine::V TapeEngine::leaf(Batch b) {
  return push(std::move(b), "leaf", nullptr);
}

TapeEngine::V TapeEngine::constant(Matrix v) {
  return push(Batch::values(std::move(v)), "const", nullptr);
}

TapeEngine::V TapeEngine::dense(V x, const std::string& name) {
  Batch y = kern::affine(val_[x], P.value(name + "/w"), P.value(name + "/b"));
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "dense", [x, yi, name](TapeEngine& t) {
    kern::affine_bwd(t.val_[x], t.P.value(name + "/w"), t.adj_[yi], t.adj_[x],
                     t.P.grad(name + "/w"), t.P.grad(name + "/b"));
  });
}

TapeEngine::V TapeEngine::add(V a, V b) {
  Batch y = kern::add(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "add", [a, b, yi](TapeEngine& t) {
    kern::addsub_bwd(t.adj_[yi], 1.0, t.adj_[a], t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::sub(V a, V b) {
  Batch y = kern::sub(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "sub", [a, b, yi](TapeEngine& t) {
    kern::addsub_bwd(t.adj_[yi], -1.0, t.adj_[a], t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::scale(V x, double c) {
  Batch y = kern::scale(val_[x], c);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "scale", [x, yi, c](TapeEngine& t) {
    t.adj_[x].m += c * t.adj_[yi].m;
  });
}

TapeEngine::V TapeEngine::cmul(V a, V b) {
  Batch y = kern::cmul(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "cmul", [a, b, yi](TapeEngine& t) {
    kern::cmul_bwd(t.val_[a], t.val_[b], t.adj_[yi], t.adj_[a], t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::matmul(V a, V b) {
  Batch y = kern::matmul(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "matmul", [a, b, yi](TapeEngine& t) {
    kern::matmul_bwd(t.val_[a], t.val_[b], t.adj_[yi], t.adj_[a], t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::matmul_nt(V a, V b) {
  Batch y = kern::matmul_nt(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "matmul_nt", [a, b, yi](TapeEngine& t) {
    kern::matmul_nt_bwd(t.val_[a], t.val_[b], t.adj_[yi], t.adj_[a],
                        t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::rowsum(V x) {
  Batch y = kern::rowsum(val_[x]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "rowsum", [x, yi](TapeEngine& t) {
    kern::rowsum_bwd(t.adj_[yi], t.adj_[x]);
  });
}

TapeEngine::V TapeEngine::mul_rowbroadcast(V a, V s) {
  Batch y = kern::mul_rowbroadcast(val_[a], val_[s]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "mul_rowbroadcast", [a, s, yi](TapeEngine& t) {
    kern::mul_rowbroadcast_bwd(t.val_[a], t.val_[s], t.adj_[yi], t.adj_[a],
                               t.adj_[s]);
  });
}

TapeEngine::V TapeEngine::mul_colbroadcast(V a, V s) {
  Batch y = kern::mul_colbroadcast(val_[a], val_[s]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "mul_colbroadcast", [a, s, yi](TapeEngine& t) {
    kern::mul_colbroadcast_bwd(t.val_[a], t.val_[s], t.adj_[yi], t.adj_[a],
                               t.adj_[s]);
  });
}

TapeEngine::V TapeEngine::concat_cols(V a, V b) {
  Batch y = kern::concat_cols(val_[a], val_[b]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "concat_cols", [a, b, yi](TapeEngine& t) {
    kern::concat_cols_bwd(t.adj_[yi], t.adj_[a], t.adj_[b]);
  });
}

TapeEngine::V TapeEngine::extract(V x, int dir, int order) {
  Batch y = kern::extract_plane(val_[x], dir, order);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "extract", [x, yi, dir, order](TapeEngine& t) {
    kern::extract_plane_bwd(t.adj_[yi], dir, order, t.adj_[x]);
  });
}

TapeEngine::V TapeEngine::values(V x) {
  Batch y = kern::value_plane(val_[x]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "values", [x, yi](TapeEngine& t) {
    kern::value_plane_bwd(t.adj_[yi], t.adj_[x]);
  });
}

TapeEngine::V TapeEngine::shift_value_rowmax(V x) {
  Batch y = kern::shift_value_rowmax(val_[x]);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "shift_rowmax", [x, yi](TapeEngine& t) {
    t.adj_[x].m += t.adj_[yi].m;
  });
}

TapeEngine::V TapeEngine::unary(V x, kern::Un f) {
  Batch y = kern::unary(val_[x], f);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "unary", [x, yi, f](TapeEngine& t) {
    kern::unary_bwd(t.val_[x], f, t.adj_[yi], t.adj_[x]);
  });
}

TapeEngine::V TapeEngine::wsum_sq(V x, Vector w, double denom) {
  Batch y = kern::wsum_sq(val_[x], w, denom);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "wsum_sq",
              [x, yi, w = std::move(w), denom](TapeEngine& t) {
                kern::wsum_sq_bwd(t.val_[x], w, denom, t.adj_[yi].m(0, 0),
                                  t.adj_[x]);
              });
}

TapeEngine::V TapeEngine::add_scalar_param(V x, const std::string& name) {
  Batch y = val_[x];
  y.value().array() += P.value(name)(0, 0);
  const V yi = static_cast<V>(val_.size());
  return push(std::move(y), "add_scalar_param", [x, yi, name](TapeEngine& t) {
    t.adj_[x].m += t.adj_[yi].m;
    t.P.grad(name)(0, 0) += t.adj_[yi].value().sum();
  });
}

void TapeEngine::backward(V root) {
  const Batch& r = val_[root];
  if (r.n != 1 || r.cols != 1 || !r.values_only())
    throw std::invalid_argument("backward: root must be a scalar value");
  adj_.clear();
  adj_.reserve(val_.size());
  for (const auto& v : val_) adj_.push_back(v.zeros_like());
  adj_[root].m(0, 0) = 1.0;
  for (int i = static_cast<int>(val_.size()) - 1; i >= 0; --i)
    if (bwd_[i]) bwd_[i](*this);
}

int TapeEngine::first_nonfinite() const {
  for (std::size_t i = 0; i < val_.size(); ++i)
    if (!val_[i].m.allFinite()) return static_cast<int>(i);
  return -1;
}

}  // namespace pinto
