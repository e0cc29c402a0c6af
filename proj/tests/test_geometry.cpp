#include <doctest.h>

#include <random>

#include "poselift/geometry.hpp"

using namespace poselift;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("project maps the optical axis to the principal point") {
  const CameraIntrinsics cam{1000.0, 100.0, 50.0};
  const Vec2 r = project(Vec3(0, 0, 2000), cam);
  CHECK(r.x() == doctest::Approx(100.0));
  CHECK(r.y() == doctest::Approx(50.0));
}

TEST_CASE("project hand examples") {
  CHECK(project(Vec3(1000, 0, 2000), {1000.0, 100.0, 50.0}).x() == doctest::Approx(600.0));
  CHECK(project(Vec3(1000, 0, 2000), {1000.0, 100.0, 50.0}).y() == doctest::Approx(50.0));
  const Vec2 r = project(Vec3(0, -500, 1000), {1000.0, 0.0, 0.0});
  CHECK(r.x() == doctest::Approx(0.0));
  CHECK(r.y() == doctest::Approx(-500.0));
}

TEST_CASE("project rejects points at or behind the camera") {
  CHECK_THROWS_AS(project(Vec3(1, 1, 0), {1000.0, 0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(project(Vec3(1, 1, -5), {1000.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("backproject_root inverts the projection example") {
  const Vec2 xy = backproject_root(Vec2(600, 50), CanonicalDepth{2.0}, {1234.0, 100.0, 50.0});
  CHECK(xy.x() == doctest::Approx(1000.0));
  CHECK(xy.y() == doctest::Approx(0.0));
}

TEST_CASE("backproject_root at the principal point is zero for any depth") {
  for (double d : {0.1, 2.0, 17.5}) {
    const Vec2 xy = backproject_root(Vec2(320, 240), CanonicalDepth{d}, {999.0, 320.0, 240.0});
    CHECK(xy.x() == 0.0);
    CHECK(xy.y() == 0.0);
  }
}

TEST_CASE("project then backproject recovers lateral coordinates") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> depth(500.0, 10000.0);
  std::uniform_real_distribution<double> lat(-4000.0, 4000.0);
  std::uniform_real_distribution<double> focal(500.0, 2000.0);
  std::uniform_real_distribution<double> pp(0.0, 1000.0);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 p(lat(rng), lat(rng), depth(rng));
    const CameraIntrinsics cam{focal(rng), pp(rng), pp(rng)};
    const Vec2 r = project(p, cam);
    const Vec2 back = backproject_root(r, CanonicalDepth{p.z() / cam.alpha}, cam);
    CHECK(back.x() == doctest::Approx(p.x()).epsilon(1e-9));
    CHECK(back.y() == doctest::Approx(p.y()).epsilon(1e-9));
  }
}

TEST_CASE("absolute_depth") {
  CHECK(absolute_depth(CanonicalDepth{2.0}, 1000.0) == doctest::Approx(2000.0));
  CHECK(absolute_depth(CanonicalDepth{4.36}, 1146.79) == doctest::Approx(5000.0044).epsilon(1e-12));
  CHECK(absolute_depth(CanonicalDepth{0.0}, 777.0) == 0.0);
  CHECK_THROWS_AS(absolute_depth(CanonicalDepth{1.0}, 0.0), std::domain_error);
  CHECK_THROWS_AS(absolute_depth(CanonicalDepth{1.0}, -5.0), std::domain_error);
}

TEST_CASE("canonical depth is invariant under simultaneous focal change") {
  // One 2D observation is consistent with many (alpha, depth) pairs; the
  // canonical depth is the invariant along that ambiguity line.
  const double canonical = 4.2;
  for (double alpha : {900.0, 1146.79, 1499.21, 1683.98}) {
    const double rz = absolute_depth(CanonicalDepth{canonical}, alpha);
    CHECK(rz / alpha == doctest::Approx(canonical).epsilon(1e-12));
  }
}

TEST_CASE("decompose examples") {
  Pose3D all_equal;
  all_equal.joints = {Vec3(5, 6, 7), Vec3(5, 6, 7), Vec3(5, 6, 7)};
  const AbsolutePose a = decompose(all_equal);
  for (const Vec3& rel : a.relative) CHECK(rel.norm() == 0.0);

  Pose3D two;
  two.joints = {Vec3(1, 2, 3), Vec3(4, 6, 3)};
  const AbsolutePose b = decompose(two);
  CHECK(b.root == Vec3(1, 2, 3));
  CHECK(b.relative[0] == Vec3(0, 0, 0));
  CHECK(b.relative[1] == Vec3(3, 4, 0));
}

TEST_CASE("compose inverts decompose bit-exactly on plausible poses") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-3000.0, 3000.0);
  std::uniform_real_distribution<double> depth(500.0, 10000.0);
  std::uniform_real_distribution<double> off(-1200.0, 1200.0);
  std::uniform_int_distribution<int> joints(2, 24);
  for (int trial = 0; trial < 2000; ++trial) {
    Pose3D p;
    const int J = joints(rng);
    p.root_index = std::uniform_int_distribution<int>(0, J - 1)(rng);
    const Vec3 root(lat(rng), lat(rng), depth(rng));
    for (int j = 0; j < J; ++j) {
      p.joints.push_back(root + Vec3(off(rng), off(rng), off(rng)));
    }
    p.joints[static_cast<size_t>(p.root_index)] = root;
    const Pose3D back = compose(decompose(p));
    REQUIRE(back.joint_count() == J);
    CHECK(back.root_index == p.root_index);
    for (int j = 0; j < J; ++j) {
      CHECK(back.joints[static_cast<size_t>(j)] == p.joints[static_cast<size_t>(j)]);
    }
  }
}

TEST_SUITE_END();
