#pragma once

#include <cstddef>

namespace poselift::kernels {

// Batched dense primitives behind the lifter network and the mixture fitter.
// Every kernel computes each output element with a fixed serial reduction
// order, so results are bitwise identical for any OpenMP thread count. The
// serial namespace mirrors each kernel with plain loops; tests assert bitwise
// agreement between the two and the benchmark compares their throughput.

// Y[B x O] = X[B x I] * W^T + b, with W stored row-major [O x I].
void linear_forward(int B, int I, int O, const double* X, const double* W,
                    const double* b, double* Y);

// dX[B x I] = dY * W, dW[O x I] = dY^T * X, db[O] = column sums of dY.
// dX may be null when the input gradient is not needed.
void linear_backward(int B, int I, int O, const double* X, const double* W,
                     const double* dY, double* dX, double* dW, double* db);

// Per-feature mean and biased variance over the batch dimension.
void bn_stats(int B, int F, const double* X, double* mean, double* var);

// Y = scale * xhat + shift with xhat = (X - mean) / sqrt(var + eps).
// xhat is written as a cache for the backward pass.
void bn_apply(int B, int F, const double* X, const double* mean, const double* var,
              const double* scale, const double* shift, double eps,
              double* Y, double* xhat);

// Gradients through bn_apply. With batch_stats the mean/var were computed from
// this batch and their dependence on X is differentiated; without it they are
// frozen running statistics and the layer is a per-feature affine map.
void bn_backward(int B, int F, const double* dY, const double* xhat, const double* var,
                 const double* scale, double eps, bool batch_stats,
                 double* dX, double* dscale, double* dshift);

void relu_forward(std::size_t n, const double* X, double* Y);
// X is the forward input (pre-activation).
void relu_backward(std::size_t n, const double* X, const double* dY, double* dX);

// Inverted dropout: Y = X * inv_keep where mask is set, else 0. The same
// kernel implements the backward pass (apply it to the output gradient).
void dropout_apply(std::size_t n, const double* X, const unsigned char* mask,
                   double inv_keep, double* Y);

// Reductions with a fixed chunked association (chunk size is a constant, not
// a function of the thread count).
double deterministic_sum(const double* x, std::size_t n);
double deterministic_weighted_sum(const double* w, const double* x, std::size_t n);
// sum_i w[i] * (x[i] - mu)^2
double deterministic_weighted_sq_dev(const double* w, const double* x, double mu,
                                     std::size_t n);

namespace serial {

void linear_forward(int B, int I, int O, const double* X, const double* W,
                    const double* b, double* Y);
void linear_backward(int B, int I, int O, const double* X, const double* W,
                     const double* dY, double* dX, double* dW, double* db);
void bn_stats(int B, int F, const double* X, double* mean, double* var);
void bn_apply(int B, int F, const double* X, const double* mean, const double* var,
              const double* scale, const double* shift, double eps,
              double* Y, double* xhat);
void bn_backward(int B, int F, const double* dY, const double* xhat, const double* var,
                 const double* scale, double eps, bool batch_stats,
                 double* dX, double* dscale, double* dshift);
void relu_forward(std::size_t n, const double* X, double* Y);
void relu_backward(std::size_t n, const double* X, const double* dY, double* dX);
void dropout_apply(std::size_t n, const double* X, const unsigned char* mask,
                   double inv_keep, double* Y);
double deterministic_sum(const double* x, std::size_t n);
double deterministic_weighted_sum(const double* w, const double* x, std::size_t n);
double deterministic_weighted_sq_dev(const double* w, const double* x, double mu,
                                     std::size_t n);

}  // namespace serial

}  // namespace poselift::kernels
