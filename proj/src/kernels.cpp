#include "poselift/kernels.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace poselift::kernels {

namespace {
constexpr std::size_t kSumChunk = 4096;
}

// ---------------------------------------------------------------- parallel

void linear_forward(int B, int I, int O, const double* X, const double* W,
                    const double* b, double* Y) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < B; ++n) {
    const double* x = X + static_cast<std::size_t>(n) * I;
    double* y = Y + static_cast<std::size_t>(n) * O;
    for (int o = 0; o < O; ++o) {
      const double* w = W + static_cast<std::size_t>(o) * I;
      double acc = b[o];
      for (int i = 0; i < I; ++i) acc += x[i] * w[i];
      y[o] = acc;
    }
  }
}

void linear_backward(int B, int I, int O, const double* X, const double* W,
                     const double* dY, double* dX, double* dW, double* db) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < O; ++o) {
    double* dw = dW + static_cast<std::size_t>(o) * I;
    std::memset(dw, 0, sizeof(double) * static_cast<std::size_t>(I));
    double acc = 0.0;
    for (int n = 0; n < B; ++n) {
      const double g = dY[static_cast<std::size_t>(n) * O + o];
      const double* x = X + static_cast<std::size_t>(n) * I;
      for (int i = 0; i < I; ++i) dw[i] += g * x[i];
      acc += g;
    }
    db[o] = acc;
  }
  if (dX != nullptr) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < B; ++n) {
      const double* dy = dY + static_cast<std::size_t>(n) * O;
      double* dx = dX + static_cast<std::size_t>(n) * I;
      std::memset(dx, 0, sizeof(double) * static_cast<std::size_t>(I));
      for (int o = 0; o < O; ++o) {
        const double g = dy[o];
        const double* w = W + static_cast<std::size_t>(o) * I;
        for (int i = 0; i < I; ++i) dx[i] += g * w[i];
      }
    }
  }
}

void bn_stats(int B, int F, const double* X, double* mean, double* var) {
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    double m = 0.0;
    for (int n = 0; n < B; ++n) m += X[static_cast<std::size_t>(n) * F + f];
    m /= B;
    double v = 0.0;
    for (int n = 0; n < B; ++n) {
      const double d = X[static_cast<std::size_t>(n) * F + f] - m;
      v += d * d;
    }
    mean[f] = m;
    var[f] = v / B;
  }
}

void bn_apply(int B, int F, const double* X, const double* mean, const double* var,
              const double* scale, const double* shift, double eps,
              double* Y, double* xhat) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < B; ++n) {
    const std::size_t row = static_cast<std::size_t>(n) * F;
    for (int f = 0; f < F; ++f) {
      const double istd = 1.0 / std::sqrt(var[f] + eps);
      const double xh = (X[row + f] - mean[f]) * istd;
      xhat[row + f] = xh;
      Y[row + f] = scale[f] * xh + shift[f];
    }
  }
}

void bn_backward(int B, int F, const double* dY, const double* xhat, const double* var,
                 const double* scale, double eps, bool batch_stats,
                 double* dX, double* dscale, double* dshift) {
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    const double istd = 1.0 / std::sqrt(var[f] + eps);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < B; ++n) {
      const std::size_t k = static_cast<std::size_t>(n) * F + f;
      sum_dy += dY[k];
      sum_dy_xh += dY[k] * xhat[k];
    }
    dshift[f] = sum_dy;
    dscale[f] = sum_dy_xh;
    const double g = scale[f];
    if (batch_stats) {
      const double c = g * istd / B;
      for (int n = 0; n < B; ++n) {
        const std::size_t k = static_cast<std::size_t>(n) * F + f;
        dX[k] = c * (B * dY[k] - sum_dy - xhat[k] * sum_dy_xh);
      }
    } else {
      const double c = g * istd;
      for (int n = 0; n < B; ++n) {
        const std::size_t k = static_cast<std::size_t>(n) * F + f;
        dX[k] = c * dY[k];
      }
    }
  }
}

void relu_forward(std::size_t n, const double* X, double* Y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    Y[i] = X[i] > 0.0 ? X[i] : 0.0;
  }
}

void relu_backward(std::size_t n, const double* X, const double* dY, double* dX) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    dX[i] = X[i] > 0.0 ? dY[i] : 0.0;
  }
}

void dropout_apply(std::size_t n, const double* X, const unsigned char* mask,
                   double inv_keep, double* Y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    Y[i] = mask[i] ? X[i] * inv_keep : 0.0;
  }
}

double deterministic_sum(const double* x, std::size_t n) {
  const std::size_t chunks = (n + kSumChunk - 1) / kSumChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kSumChunk;
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += x[i];
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double deterministic_weighted_sum(const double* w, const double* x, std::size_t n) {
  const std::size_t chunks = (n + kSumChunk - 1) / kSumChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kSumChunk;
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += w[i] * x[i];
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double deterministic_weighted_sq_dev(const double* w, const double* x, double mu,
                                     std::size_t n) {
  const std::size_t chunks = (n + kSumChunk - 1) / kSumChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kSumChunk;
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = x[i] - mu;
      acc += w[i] * d * d;
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// ---------------------------------------------------------------- serial

namespace serial {

void linear_forward(int B, int I, int O, const double* X, const double* W,
                    const double* b, double* Y) {
  for (int n = 0; n < B; ++n) {
    const double* x = X + static_cast<std::size_t>(n) * I;
    double* y = Y + static_cast<std::size_t>(n) * O;
    for (int o = 0; o < O; ++o) {
      const double* w = W + static_cast<std::size_t>(o) * I;
      double acc = b[o];
      for (int i = 0; i < I; ++i) acc += x[i] * w[i];
      y[o] = acc;
    }
  }
}

void linear_backward(int B, int I, int O, const double* X, const double* W,
                     const double* dY, double* dX, double* dW, double* db) {
  for (int o = 0; o < O; ++o) {
    double* dw = dW + static_cast<std::size_t>(o) * I;
    std::memset(dw, 0, sizeof(double) * static_cast<std::size_t>(I));
    double acc = 0.0;
    for (int n = 0; n < B; ++n) {
      const double g = dY[static_cast<std::size_t>(n) * O + o];
      const double* x = X + static_cast<std::size_t>(n) * I;
      for (int i = 0; i < I; ++i) dw[i] += g * x[i];
      acc += g;
    }
    db[o] = acc;
  }
  if (dX != nullptr) {
    for (int n = 0; n < B; ++n) {
      const double* dy = dY + static_cast<std::size_t>(n) * O;
      double* dx = dX + static_cast<std::size_t>(n) * I;
      std::memset(dx, 0, sizeof(double) * static_cast<std::size_t>(I));
      for (int o = 0; o < O; ++o) {
        const double g = dy[o];
        const double* w = W + static_cast<std::size_t>(o) * I;
        for (int i = 0; i < I; ++i) dx[i] += g * w[i];
      }
    }
  }
}

void bn_stats(int B, int F, const double* X, double* mean, double* var) {
  for (int f = 0; f < F; ++f) {
    double m = 0.0;
    for (int n = 0; n < B; ++n) m += X[static_cast<std::size_t>(n) * F + f];
    m /= B;
    double v = 0.0;
    for (int n = 0; n < B; ++n) {
      const double d = X[static_cast<std::size_t>(n) * F + f] - m;
      v += d * d;
    }
    mean[f] = m;
    var[f] = v / B;
  }
}

void bn_apply(int B, int F, const double* X, const double* mean, const double* var,
              const double* scale, const double* shift, double eps,
              double* Y, double* xhat) {
  for (int n = 0; n < B; ++n) {
    const std::size_t row = static_cast<std::size_t>(n) * F;
    for (int f = 0; f < F; ++f) {
      const double istd = 1.0 / std::sqrt(var[f] + eps);
      const double xh = (X[row + f] - mean[f]) * istd;
      xhat[row + f] = xh;
      Y[row + f] = scale[f] * xh + shift[f];
    }
  }
}

void bn_backward(int B, int F, const double* dY, const double* xhat, const double* var,
                 const double* scale, double eps, bool batch_stats,
                 double* dX, double* dscale, double* dshift) {
  for (int f = 0; f < F; ++f) {
    const double istd = 1.0 / std::sqrt(var[f] + eps);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < B; ++n) {
      const std::size_t k = static_cast<std::size_t>(n) * F + f;
      sum_dy += dY[k];
      sum_dy_xh += dY[k] * xhat[k];
    }
    dshift[f] = sum_dy;
    dscale[f] = sum_dy_xh;
    const double g = scale[f];
    if (batch_stats) {
      const double c = g * istd / B;
      for (int n = 0; n < B; ++n) {
        const std::size_t k = static_cast<std::size_t>(n) * F + f;
        dX[k] = c * (B * dY[k] - sum_dy - xhat[k] * sum_dy_xh);
      }
    } else {
      const double c = g * istd;
      for (int n = 0; n < B; ++n) {
        const std::size_t k = static_cast<std::size_t>(n) * F + f;
        dX[k] = c * dY[k];
      }
    }
  }
}

void relu_forward(std::size_t n, const double* X, double* Y) {
  for (std::size_t i = 0; i < n; ++i) Y[i] = X[i] > 0.0 ? X[i] : 0.0;
}

void relu_backward(std::size_t n, const double* X, const double* dY, double* dX) {
  for (std::size_t i = 0; i < n; ++i) dX[i] = X[i] > 0.0 ? dY[i] : 0.0;
}

void dropout_apply(std::size_t n, const double* X, const unsigned char* mask,
                   double inv_keep, double* Y) {
  for (std::size_t i = 0; i < n; ++i) Y[i] = mask[i] ? X[i] * inv_keep : 0.0;
}

double deterministic_sum(const double* x, std::size_t n) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < n; lo += kSumChunk) {
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += x[i];
    total += acc;
  }
  return total;
}

double deterministic_weighted_sum(const double* w, const double* x, std::size_t n) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < n; lo += kSumChunk) {
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += w[i] * x[i];
    total += acc;
  }
  return total;
}

double deterministic_weighted_sq_dev(const double* w, const double* x, double mu,
                                     std::size_t n) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < n; lo += kSumChunk) {
    const std::size_t hi = lo + kSumChunk < n ? lo + kSumChunk : n;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = x[i] - mu;
      acc += w[i] * d * d;
    }
    total += acc;
  }
  return total;
}

}  // namespace serial

}  // namespace poselift::kernels
