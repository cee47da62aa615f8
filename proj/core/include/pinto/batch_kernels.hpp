#pragma once
// Forward kernels and matching adjoint kernels for Batch values.
//
// Every kernel propagates the jet planes of its operands in the same pass
// (univariate second-order rules per seeded direction; directions never
// mix). The *_bwd functions accumulate reverse-mode adjoints for the full
// plane stack, so a loss may depend on extracted derivative planes and the
// parameter gradients stay exact.

#include <pinto/batch.hpp>

namespace pinto::kern {

enum class Un { Tanh, Swish, Exp, Recip, Sin, Square };

// y = x * W + b (bias enters the value plane only).
Batch affine(const Batch& x, const Matrix& W, const Matrix& b);
void affine_bwd(const Batch& x, const Matrix& W, const Batch& gy, Batch& gx,
                Matrix& gW, Matrix& gb);

Batch add(const Batch& a, const Batch& b);
Batch sub(const Batch& a, const Batch& b);
void addsub_bwd(const Batch& gy, double sign_b, Batch& ga, Batch& gb);

Batch scale(const Batch& x, double c);

// Elementwise product with jet cross terms.
Batch cmul(const Batch& a, const Batch& b);
void cmul_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
              Batch& gb);

// z = a * b, contraction over a.cols == b.n.
Batch matmul(const Batch& a, const Batch& b);
void matmul_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
                Batch& gb);

// z = a * b^T, contraction over a.cols == b.cols; z is a.n x b.n.
Batch matmul_nt(const Batch& a, const Batch& b);
void matmul_nt_bwd(const Batch& a, const Batch& b, const Batch& gz, Batch& ga,
                   Batch& gb);

// (n x c) -> (n x 1) sum across columns, per plane.
Batch rowsum(const Batch& x);
void rowsum_bwd(const Batch& gy, Batch& gx);

// z = a ∘ s with s (n x 1) replicated across columns.
Batch mul_rowbroadcast(const Batch& a, const Batch& s);
void mul_rowbroadcast_bwd(const Batch& a, const Batch& s, const Batch& gz,
                          Batch& ga, Batch& gs);

// z = a ∘ s with s (1 x c) replicated across rows.
Batch mul_colbroadcast(const Batch& a, const Batch& s);
void mul_colbroadcast_bwd(const Batch& a, const Batch& s, const Batch& gz,
                          Batch& ga, Batch& gs);

Batch concat_cols(const Batch& a, const Batch& b);
void concat_cols_bwd(const Batch& gy, Batch& ga, Batch& gb);

// Copies one derivative plane out as a plain value batch.
Batch extract_plane(const Batch& x, int dir, int order);
void extract_plane_bwd(const Batch& gy, int dir, int order, Batch& gx);

// Copies the value plane out as a plain value batch (drops jets).
Batch value_plane(const Batch& x);
void value_plane_bwd(const Batch& gy, Batch& gx);

// Subtracts the (detached) rowwise max of the value plane from the value
// plane. Jet planes pass through; the adjoint is the identity, which is
// exact because softmax and its derivatives are shift invariant.
Batch shift_value_rowmax(const Batch& x);

Batch unary(const Batch& x, Un f);
void unary_bwd(const Batch& x, Un f, const Batch& gy, Batch& gx);

// Scalar (1x1) result: sum_ij w_i * x(i,j)^2 / denom over the value plane.
// Empty w means unit weights.
Batch wsum_sq(const Batch& x, const Vector& w, double denom);
void wsum_sq_bwd(const Batch& x, const Vector& w, double denom, double gout,
                 Batch& gx);

}  // namespace pinto::kern
