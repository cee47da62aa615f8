#include <pinto/model.hpp>

#include <stdexcept>

namespace pinto {
namespace {

Matrix glorot(Rng& rng, int rows, int cols) {
  const double lim = std::sqrt(6.0 / (rows + cols));
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-lim, lim);
  return w;
}

void add_dense(ParameterStore& P, Rng& rng, const std::string& name, int in,
               int out) {
  P.add(name + "/w", glorot(rng, in, out));
  P.add(name + "/b", Matrix::Zero(1, out));
}

void check_positive(int v, const char* what) {
  if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

ParameterStore init_params(const ArchitectureConfig& a, std::uint64_t seed) {
  check_positive(a.query_dim, "query_dim");
  check_positive(a.boundary_dim, "boundary_dim");
  check_positive(a.value_dim, "value_dim");
  check_positive(a.fields, "fields");
  check_positive(a.embed, "embed");
  check_positive(a.heads, "heads");
  check_positive(a.key_dim, "key_dim");
  check_positive(a.encoder_layers, "encoder_layers");
  check_positive(a.cau_count, "cau_count");
  if (a.cau_dense_layers < 0 || a.head_hidden_layers < 0)
    throw std::invalid_argument("layer counts must be non-negative");

  ParameterStore P;
  Rng rng(seed);
  auto encoder = [&](const std::string& pfx, int in) {
    for (int l = 0; l < a.encoder_layers; ++l)
      add_dense(P, rng, pfx + "/l" + pad2(l), l == 0 ? in : a.embed, a.embed);
  };
  encoder("qpe", a.query_dim);
  encoder("bpe", a.boundary_dim);
  encoder("bve", a.value_dim);
  for (int j = 0; j < a.cau_count; ++j) {
    const std::string pfx = "cau" + pad2(j);
    for (int h = 0; h < a.heads; ++h) {
      const std::string hp = pfx + "/h" + std::to_string(h);
      add_dense(P, rng, hp + "/q", a.embed, a.key_dim);
      add_dense(P, rng, hp + "/k", a.embed, a.key_dim);
      add_dense(P, rng, hp + "/v", a.embed, a.key_dim);
    }
    add_dense(P, rng, pfx + "/att_out", a.heads * a.key_dim, a.embed);
    for (int l = 0; l < a.cau_dense_layers; ++l)
      add_dense(P, rng, pfx + "/ff" + pad2(l), a.embed, a.embed);
  }
  for (int f = 0; f < a.fields; ++f) {
    const std::string hp = "head" + pad2(f);
    for (int l = 0; l < a.head_hidden_layers; ++l)
      add_dense(P, rng, hp + "/l" + pad2(l), a.embed, a.embed);
    add_dense(P, rng, hp + "/out", a.embed, 1);
  }
  return P;
}

ParameterStore init_deeponet_params(const DeepOnetConfig& c,
                                    std::uint64_t seed) {
  check_positive(c.trunk_in, "trunk_in");
  check_positive(c.branch_in, "branch_in");
  check_positive(c.p, "p");
  check_positive(c.fields, "fields");
  if (c.trunk_hidden.empty() || c.branch_hidden.empty())
    throw std::invalid_argument("deeponet needs at least one hidden layer");

  ParameterStore P;
  Rng rng(seed);
  auto mlp = [&](const std::string& pfx, int in, const std::vector<int>& hidden) {
    int prev = in;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      add_dense(P, rng, pfx + "/l" + pad2(static_cast<int>(l)), prev, hidden[l]);
      prev = hidden[l];
    }
    return prev;
  };
  const int tr_out = mlp("trunk", c.trunk_in, c.trunk_hidden);
  const int br_out = mlp("branch", c.branch_in, c.branch_hidden);
  for (int f = 0; f < c.fields; ++f) {
    add_dense(P, rng, "trunk/head" + pad2(f), tr_out, c.p);
    add_dense(P, rng, "branch/head" + pad2(f), br_out, c.p);
    P.add("bias" + pad2(f), Matrix::Zero(1, 1));
  }
  return P;
}

Vector attention_logits(const Vector& query, const Matrix& keys, int m) {
  if (keys.rows() < 1) throw std::invalid_argument("attention: no keys");
  if (keys.cols() != query.size() || query.size() != m)
    throw std::invalid_argument("attention: dimension mismatch");
  return (keys * query) / std::sqrt(static_cast<double>(m));
}

Vector attention_scores(const Vector& query, const Matrix& keys, int m) {
  Vector logits = attention_logits(query, keys, m);
  const double mx = logits.maxCoeff();
  Vector z = (logits.array() - mx).exp();
  return z / z.sum();
}

std::vector<double> attention_quadrature_check(
    const ArchitectureConfig& a, const ParameterStore& P, const Matrix& queries,
    const std::function<void(double, Eigen::Ref<Vector>, Eigen::Ref<Vector>)>&
        boundary_fn,
    const std::vector<int>& L_values) {
  EvalEngine e(P);
  std::vector<Matrix> outs;
  for (int L : L_values) {
    Matrix bc(L, a.boundary_dim), bv(L, a.value_dim);
    Vector cbuf(a.boundary_dim), vbuf(a.value_dim);
    for (int i = 0; i < L; ++i) {
      boundary_fn((i + 0.5) / L, cbuf, vbuf);
      bc.row(i) = cbuf.transpose();
      bv.row(i) = vbuf.transpose();
    }
    auto fields = pinto_forward(e, a, e.leaf(Batch::values(queries)),
                                e.leaf(Batch::values(bc)),
                                e.leaf(Batch::values(bv)));
    Matrix out(queries.rows(), a.fields);
    for (int f = 0; f < a.fields; ++f) out.col(f) = fields[f].value();
    outs.push_back(std::move(out));
  }
  std::vector<double> disc;
  for (std::size_t k = 0; k + 1 < outs.size(); ++k)
    disc.push_back((outs[k] - outs[k + 1]).cwiseAbs().maxCoeff());
  return disc;
}

}  // namespace pinto
