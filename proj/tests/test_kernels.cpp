#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "poselift/kernels.hpp"

using namespace poselift;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<unsigned char> random_mask(std::mt19937_64& rng, size_t n) {
  std::bernoulli_distribution b(0.5);
  std::vector<unsigned char> m(n);
  for (auto& x : m) x = b(rng) ? 1 : 0;
  return m;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("linear_forward matches the serial reference bitwise and Eigen numerically") {
  std::mt19937_64 rng(21);
  for (auto [B, I, O] : {std::tuple{1, 3, 5}, {7, 16, 9}, {64, 37, 256}, {33, 256, 49}}) {
    const auto X = random_vec(rng, static_cast<size_t>(B) * I);
    const auto W = random_vec(rng, static_cast<size_t>(O) * I);
    const auto b = random_vec(rng, static_cast<size_t>(O));
    std::vector<double> Yp(static_cast<size_t>(B) * O), Ys(Yp.size());
    kernels::linear_forward(B, I, O, X.data(), W.data(), b.data(), Yp.data());
    kernels::serial::linear_forward(B, I, O, X.data(), W.data(), b.data(), Ys.data());
    CHECK(bitwise_equal(Yp, Ys));

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> Xm(X.data(), B, I), Wm(W.data(), O, I);
    Eigen::Map<const Eigen::VectorXd> bm(b.data(), O);
    RowMat expect = (Xm * Wm.transpose()).rowwise() + bm.transpose();
    for (int n = 0; n < B; ++n) {
      for (int o = 0; o < O; ++o) {
        CHECK(Yp[static_cast<size_t>(n) * O + o] ==
              doctest::Approx(expect(n, o)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("linear_backward matches the serial reference bitwise and Eigen numerically") {
  std::mt19937_64 rng(22);
  const int B = 19, I = 23, O = 11;
  const auto X = random_vec(rng, static_cast<size_t>(B) * I);
  const auto W = random_vec(rng, static_cast<size_t>(O) * I);
  const auto dY = random_vec(rng, static_cast<size_t>(B) * O);
  std::vector<double> dXp(static_cast<size_t>(B) * I), dWp(static_cast<size_t>(O) * I), dbp(O);
  std::vector<double> dXs = dXp, dWs = dWp, dbs = dbp;
  kernels::linear_backward(B, I, O, X.data(), W.data(), dY.data(), dXp.data(), dWp.data(),
                           dbp.data());
  kernels::serial::linear_backward(B, I, O, X.data(), W.data(), dY.data(), dXs.data(),
                                   dWs.data(), dbs.data());
  CHECK(bitwise_equal(dXp, dXs));
  CHECK(bitwise_equal(dWp, dWs));
  CHECK(bitwise_equal(dbp, dbs));

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> Xm(X.data(), B, I), Wm(W.data(), O, I), dYm(dY.data(), B, O);
  RowMat dXe = dYm * Wm;
  RowMat dWe = dYm.transpose() * Xm;
  Eigen::VectorXd dbe = dYm.colwise().sum();
  for (int n = 0; n < B; ++n) {
    for (int i = 0; i < I; ++i) {
      CHECK(dXp[static_cast<size_t>(n) * I + i] == doctest::Approx(dXe(n, i)).epsilon(1e-12));
    }
  }
  for (int o = 0; o < O; ++o) {
    CHECK(dbp[static_cast<size_t>(o)] == doctest::Approx(dbe(o)).epsilon(1e-12));
    for (int i = 0; i < I; ++i) {
      CHECK(dWp[static_cast<size_t>(o) * I + i] == doctest::Approx(dWe(o, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("batch-norm kernels match the serial reference bitwise") {
  std::mt19937_64 rng(23);
  const int B = 31, F = 47;
  const size_t n = static_cast<size_t>(B) * F;
  const auto X = random_vec(rng, n);
  const auto scale = random_vec(rng, static_cast<size_t>(F), 0.5, 1.5);
  const auto shift = random_vec(rng, static_cast<size_t>(F));
  const double eps = 1e-5;

  std::vector<double> mp(F), vp(F), ms(F), vs(F);
  kernels::bn_stats(B, F, X.data(), mp.data(), vp.data());
  kernels::serial::bn_stats(B, F, X.data(), ms.data(), vs.data());
  CHECK(bitwise_equal(mp, ms));
  CHECK(bitwise_equal(vp, vs));

  std::vector<double> Yp(n), xhp(n), Ysr(n), xhs(n);
  kernels::bn_apply(B, F, X.data(), mp.data(), vp.data(), scale.data(), shift.data(), eps,
                    Yp.data(), xhp.data());
  kernels::serial::bn_apply(B, F, X.data(), mp.data(), vp.data(), scale.data(), shift.data(),
                            eps, Ysr.data(), xhs.data());
  CHECK(bitwise_equal(Yp, Ysr));
  CHECK(bitwise_equal(xhp, xhs));

  const auto dY = random_vec(rng, n);
  for (bool batch_stats : {true, false}) {
    std::vector<double> dXp(n), dsp(F), dhp(F), dXs(n), dss(F), dhs(F);
    kernels::bn_backward(B, F, dY.data(), xhp.data(), vp.data(), scale.data(), eps, batch_stats,
                         dXp.data(), dsp.data(), dhp.data());
    kernels::serial::bn_backward(B, F, dY.data(), xhp.data(), vp.data(), scale.data(), eps,
                                 batch_stats, dXs.data(), dss.data(), dhs.data());
    CHECK(bitwise_equal(dXp, dXs));
    CHECK(bitwise_equal(dsp, dss));
    CHECK(bitwise_equal(dhp, dhs));
  }
}

TEST_CASE("bn_stats computes the batch mean and biased variance") {
  const int B = 4, F = 1;
  const std::vector<double> X = {1.0, 2.0, 3.0, 6.0};
  std::vector<double> m(1), v(1);
  kernels::bn_stats(B, F, X.data(), m.data(), v.data());
  CHECK(m[0] == doctest::Approx(3.0));
  CHECK(v[0] == doctest::Approx(3.5));  // ((4+1+0+9)/4)
}

TEST_CASE("elementwise kernels match the serial reference bitwise") {
  std::mt19937_64 rng(24);
  const size_t n = 10001;
  const auto X = random_vec(rng, n);
  const auto dY = random_vec(rng, n);
  const auto mask = random_mask(rng, n);

  std::vector<double> a(n), b(n);
  kernels::relu_forward(n, X.data(), a.data());
  kernels::serial::relu_forward(n, X.data(), b.data());
  CHECK(bitwise_equal(a, b));

  kernels::relu_backward(n, X.data(), dY.data(), a.data());
  kernels::serial::relu_backward(n, X.data(), dY.data(), b.data());
  CHECK(bitwise_equal(a, b));

  kernels::dropout_apply(n, X.data(), mask.data(), 2.0, a.data());
  kernels::serial::dropout_apply(n, X.data(), mask.data(), 2.0, b.data());
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("deterministic reductions match the serial reference bitwise") {
  std::mt19937_64 rng(25);
  for (size_t n : {size_t{1}, size_t{4095}, size_t{4096}, size_t{4097}, size_t{50000}}) {
    const auto x = random_vec(rng, n);
    const auto w = random_vec(rng, n, 0.0, 1.0);
    CHECK(kernels::deterministic_sum(x.data(), n) ==
          kernels::serial::deterministic_sum(x.data(), n));
    CHECK(kernels::deterministic_weighted_sum(w.data(), x.data(), n) ==
          kernels::serial::deterministic_weighted_sum(w.data(), x.data(), n));
    CHECK(kernels::deterministic_weighted_sq_dev(w.data(), x.data(), 0.25, n) ==
          kernels::serial::deterministic_weighted_sq_dev(w.data(), x.data(), 0.25, n));
  }
}

TEST_SUITE_END();
