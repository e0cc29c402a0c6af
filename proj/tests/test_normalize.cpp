#include <doctest.h>

#include <cmath>
#include <random>

#include "poselift/normalize.hpp"

using namespace poselift;

namespace {

Pose2D make_pose(std::initializer_list<Vec2> pts) {
  Pose2D p;
  p.joints = pts;
  return p;
}

Pose2D random_pose(std::mt19937_64& rng, int J) {
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  Pose2D p;
  for (int j = 0; j < J; ++j) p.joints.emplace_back(coord(rng), coord(rng));
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("normalize");

TEST_CASE("shift_principal") {
  CHECK(shift_principal(make_pose({{512, 384}}), Vec2(512, 384)).joints[0] == Vec2(0, 0));
  CHECK(shift_principal(make_pose({{100, 50}}), Vec2(0, 0)).joints[0] == Vec2(100, 50));
  CHECK(shift_principal(make_pose({{10, -4}}), Vec2(3, 1)).joints[0] == Vec2(7, -5));
}

TEST_CASE("statistics hand examples") {
  const PoseStats a = statistics(make_pose({{-1, 0}, {3, 0}}));
  CHECK(a.mean == Vec2(1, 0));
  CHECK(a.sigma == doctest::Approx(2.0));

  const PoseStats b = statistics(make_pose({{5, 5}, {5, 5}, {5, 5}}));
  CHECK(b.mean == Vec2(5, 5));
  CHECK(b.sigma == 0.0);

  const PoseStats c =
      statistics(make_pose({{0.5, 0.5}, {0.5, -0.5}, {-0.5, 0.5}, {-0.5, -0.5}}));
  CHECK(c.mean.norm() == doctest::Approx(0.0));
  CHECK(c.sigma == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("normalize_layer composition example") {
  const NormalizedInput ni = normalize_layer(make_pose({{-1, 0}, {3, 0}}), Vec2(0, 0));
  CHECK(ni.normalized[0] == Vec2(-1, 0));
  CHECK(ni.normalized[1] == Vec2(1, 0));
  CHECK(ni.location == Vec2(1, 0));
  CHECK(ni.scale == doctest::Approx(2.0));
}

TEST_CASE("normalization is a fixed point") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose2D pose = random_pose(rng, 17);
    const NormalizedInput ni = normalize_layer(pose, Vec2(500, 400));
    Pose2D renorm;
    renorm.joints = ni.normalized;
    const PoseStats s = statistics(renorm);
    CHECK(std::abs(s.mean.x()) < 1e-9);
    CHECK(std::abs(s.mean.y()) < 1e-9);
    CHECK(s.sigma == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("degenerate pose is an error") {
  CHECK_THROWS_AS(normalize_layer(make_pose({{7, 7}, {7, 7}}), Vec2(0, 0)), std::domain_error);
}

TEST_CASE("translation covariance") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose2D pose = random_pose(rng, 13);
    const Vec2 t(37.5, -110.25);
    Pose2D moved;
    for (const Vec2& p : pose.joints) moved.joints.push_back(p + t);
    const NormalizedInput a = normalize_layer(pose, Vec2(0, 0));
    const NormalizedInput b = normalize_layer(moved, Vec2(0, 0));
    CHECK((b.location - (a.location + t)).norm() < 1e-9);
    CHECK(b.scale == doctest::Approx(a.scale).epsilon(1e-12));
    for (size_t j = 0; j < pose.joints.size(); ++j) {
      CHECK((a.normalized[j] - b.normalized[j]).norm() < 1e-12);
    }
  }
}

TEST_CASE("scale covariance about the mean") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose2D pose = random_pose(rng, 13);
    const NormalizedInput a = normalize_layer(pose, Vec2(0, 0));
    const double s = 3.25;
    Pose2D scaled;
    for (const Vec2& p : pose.joints) {
      scaled.joints.push_back(a.location + s * (p - a.location));
    }
    const NormalizedInput b = normalize_layer(scaled, Vec2(0, 0));
    CHECK(b.scale == doctest::Approx(s * a.scale).epsilon(1e-12));
    CHECK((b.location - a.location).norm() < 1e-9);
    for (size_t j = 0; j < pose.joints.size(); ++j) {
      CHECK((a.normalized[j] - b.normalized[j]).norm() < 1e-12);
    }
  }
}

TEST_CASE("flatten layout with and without location and scale") {
  const NormalizedInput ni = normalize_layer(make_pose({{-1, 0}, {3, 0}}), Vec2(0, 0));
  const std::vector<double> with = ni.flatten(true);
  REQUIRE(with.size() == 7);  // 2J + 3
  CHECK(with[0] == -1.0);
  CHECK(with[1] == 0.0);
  CHECK(with[2] == 1.0);
  CHECK(with[3] == 0.0);
  CHECK(with[4] == 1.0);  // u.x
  CHECK(with[5] == 0.0);  // u.y
  CHECK(with[6] == doctest::Approx(2.0));

  const std::vector<double> without = ni.flatten(false);
  REQUIRE(without.size() == 4);  // 2J
  for (size_t i = 0; i < without.size(); ++i) CHECK(without[i] == with[i]);
}

TEST_SUITE_END();
