#include <gtest/gtest.h>

#include <random>

#include "ocgs/sh.hpp"

using namespace ocgs;

TEST(Sh, DegreeZeroIsConstant) {
  const std::vector<double> c = {0.7, -0.2, 0.1};
  for (const Eigen::Vector3d d : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0.6, 0.8), Eigen::Vector3d(0, 0, -1)}) {
    const Eigen::Vector3d rgb = eval_sh_color(c, d, 0);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(rgb[k], 0.28209479 * c[k] + 0.5, 1e-8);
  }
}

TEST(Sh, DegreeOneBandIsOdd) {
  std::vector<double> c(12, 0.0);
  for (int i = 3; i < 12; ++i) c[i] = 0.05 * (i - 6);
  const Eigen::Vector3d d = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const Eigen::Vector3d p = eval_sh_color(c, d, 1), m = eval_sh_color(c, -d, 1);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR((p[k] - 0.5) + (m[k] - 0.5), 0.0, 1e-15);
}

TEST(Sh, BasisOrthonormalOnSphere) {
  // Monte Carlo check of orthonormality; loose tolerance.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  const int N = 200000;
  std::vector<double> acc(16 * 16, 0.0), b(16);
  for (int s = 0; s < N; ++s) {
    const Eigen::Vector3d d = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
    sh_basis(3, d, b);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) acc[i * 16 + j] += b[i] * b[j];
  }
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      EXPECT_NEAR(acc[i * 16 + j] * 4 * 3.14159265358979 / N, i == j ? 1.0 : 0.0, 0.03) << i << "," << j;
}

TEST(Sh, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  std::vector<double> c(48);
  for (auto& x : c) x = U(rng);
  c[0] = c[1] = c[2] = 1.0;  // keep away from the clamp
  const Eigen::Vector3d d = Eigen::Vector3d(0.2, 0.4, -0.9).normalized();
  const Eigen::Vector3d g(0.3, -0.7, 0.5);
  std::vector<double> gc(48, 0.0);
  Eigen::Vector3d gd = Eigen::Vector3d::Zero();
  eval_sh_color_backward(c, d, 3, g, gc, &gd);
  const double h = 1e-6;
  for (int i = 0; i < 48; ++i) {
    auto cp = c, cm = c;
    cp[i] += h, cm[i] -= h;
    const double fd = g.dot(eval_sh_color(cp, d, 3) - eval_sh_color(cm, d, 3)) / (2 * h);
    EXPECT_NEAR(gc[i], fd, 1e-8);
  }
  for (int a = 0; a < 3; ++a) {
    Eigen::Vector3d dp = d, dm = d;
    dp[a] += h, dm[a] -= h;  // raw direction components, as the basis polynomials see them
    const double fd = g.dot(eval_sh_color(c, dp, 3) - eval_sh_color(c, dm, 3)) / (2 * h);
    EXPECT_NEAR(gd[a], fd, 1e-7);
  }
}

TEST(Sh, ClampedChannelsHaveNoGradient) {
  std::vector<double> c = {-5.0, 0.0, 0.0};
  std::vector<double> gc(3, 0.0);
  const Eigen::Vector3d rgb = eval_sh_color(c, Eigen::Vector3d::UnitZ(), 0);
  EXPECT_EQ(rgb[0], 0.0);
  eval_sh_color_backward(c, Eigen::Vector3d::UnitZ(), 0, Eigen::Vector3d::Ones(), gc, nullptr);
  EXPECT_EQ(gc[0], 0.0);
  EXPECT_NEAR(gc[1], kShC0, 1e-15);
}

TEST(Sh, DcRoundTrip) {
  const Eigen::Vector3d rgb(1.0, 0.0, 0.25);
  const Eigen::Vector3d dc = rgb_to_sh_dc(rgb);
  EXPECT_NEAR(dc[0], 0.5 / 0.28209479, 1e-6);
  const std::vector<double> c = {dc[0], dc[1], dc[2]};
  EXPECT_LT((eval_sh_color(c, Eigen::Vector3d::UnitX(), 0) - rgb).norm(), 1e-14);
}
