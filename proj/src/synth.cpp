#include "poselift/synth.hpp"

#include <Eigen/Geometry>
#include <stdexcept>

#include <json.hpp>

#include "poselift/rng.hpp"

namespace poselift {

namespace {

double draw_in(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);  // always consume one draw, even for lo == hi
  return lo + u * (hi - lo);
}

Mat3 euler_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(ax, Vec3::UnitX()) *
          Eigen::AngleAxisd(ay, Vec3::UnitY()) *
          Eigen::AngleAxisd(az, Vec3::UnitZ()))
      .toRotationMatrix();
}

void check_pairing(const std::vector<int>& pairing, int joint_count) {
  if (static_cast<int>(pairing.size()) != joint_count) {
    throw std::domain_error("pairing table does not cover all joints");
  }
  for (int i = 0; i < joint_count; ++i) {
    const int p = pairing[static_cast<size_t>(i)];
    if (p < 0 || p >= joint_count || pairing[static_cast<size_t>(p)] != i) {
      throw std::domain_error("pairing table is not an involution");
    }
  }
}

}  // namespace

void SkeletonSpec::validate() const {
  const auto J = static_cast<size_t>(joint_count);
  if (joint_count < 2) throw std::domain_error("skeleton: need at least 2 joints");
  if (root_index < 0 || root_index >= joint_count) {
    throw std::domain_error("skeleton: root_index out of range");
  }
  if (parents.size() != J || offsets.size() != J || angle_limits.size() != J) {
    throw std::domain_error("skeleton: field lengths do not match joint_count");
  }
  for (int j = 0; j < joint_count; ++j) {
    if (j == root_index) {
      if (parents[static_cast<size_t>(j)] != -1) {
        throw std::domain_error("skeleton: root must be parentless");
      }
      continue;
    }
    const int p = parents[static_cast<size_t>(j)];
    if (p < 0 || p >= joint_count || p == j) {
      throw std::domain_error("skeleton: invalid parent for joint " + std::to_string(j));
    }
    if (!(bone_length(j) > 0.0)) {
      throw std::domain_error("skeleton: zero-length bone at joint " + std::to_string(j));
    }
    // walk to the root; a cycle would exceed joint_count hops
    int cur = j, hops = 0;
    while (cur != root_index) {
      cur = parents[static_cast<size_t>(cur)];
      if (cur < 0 || ++hops > joint_count) {
        throw std::domain_error("skeleton: parent graph is not a tree rooted at root_index");
      }
    }
  }
  for (const auto& lim : angle_limits) {
    for (const Vec2& ax : lim) {
      if (!(ax.x() <= ax.y())) throw std::domain_error("skeleton: angle range with lo > hi");
    }
  }
  check_pairing(pairing, joint_count);
}

SkeletonSpec default_skeleton() {
  SkeletonSpec s;
  s.joint_count = 17;
  s.root_index = 0;
  s.parents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  s.offsets = {
      {0, 0, 0},       // pelvis (root)
      {-130, 0, 0},    // r_hip
      {0, 440, 0},     // r_knee (thigh, +y is down)
      {0, 430, 0},     // r_ankle (shin)
      {130, 0, 0},     // l_hip
      {0, 440, 0},     // l_knee
      {0, 430, 0},     // l_ankle
      {0, -230, 0},    // spine
      {0, -250, 0},    // thorax
      {0, -110, 0},    // neck
      {0, -120, 0},    // head
      {180, -30, 0},   // l_shoulder
      {280, 0, 0},     // l_elbow (upper arm)
      {250, 0, 0},     // l_wrist (forearm)
      {-180, -30, 0},  // r_shoulder
      {-280, 0, 0},    // r_elbow
      {-250, 0, 0},    // r_wrist
  };
  const double pi = 3.14159265358979323846;
  auto lim = [](double xl, double xh, double yl, double yh, double zl, double zh) {
    return std::array<Vec2, 3>{Vec2(xl, xh), Vec2(yl, yh), Vec2(zl, zh)};
  };
  const auto fixed = lim(0, 0, 0, 0, 0, 0);
  s.angle_limits.resize(17, fixed);
  s.angle_limits[0] = lim(-0.3, 0.3, -pi, pi, -0.3, 0.3);  // whole-body orientation
  s.angle_limits[2] = s.angle_limits[5] = lim(-0.8, 0.5, -0.35, 0.35, -0.35, 0.35);
  s.angle_limits[3] = s.angle_limits[6] = lim(0.0, 1.3, 0, 0, 0, 0);
  s.angle_limits[7] = lim(-0.25, 0.25, -0.25, 0.25, -0.25, 0.25);
  s.angle_limits[8] = lim(-0.2, 0.2, -0.2, 0.2, -0.2, 0.2);
  s.angle_limits[9] = s.angle_limits[10] = lim(-0.3, 0.3, -0.3, 0.3, -0.2, 0.2);
  s.angle_limits[11] = s.angle_limits[14] = lim(-0.15, 0.15, -0.15, 0.15, -0.15, 0.15);
  s.angle_limits[12] = s.angle_limits[15] = lim(-0.9, 0.9, -0.9, 0.9, -0.6, 0.6);
  s.angle_limits[13] = s.angle_limits[16] = lim(0, 0, 0.0, 1.8, 0, 0);
  s.pairing = {0, 4, 5, 6, 1, 2, 3, 7, 8, 9, 10, 14, 15, 16, 11, 12, 13};
  s.validate();
  return s;
}

std::string skeleton_to_json(const SkeletonSpec& spec) {
  nlohmann::json j;
  j["version"] = 1;
  j["joint_count"] = spec.joint_count;
  j["root_index"] = spec.root_index;
  j["parents"] = spec.parents;
  j["pairing"] = spec.pairing;
  nlohmann::json offs = nlohmann::json::array();
  for (const Vec3& o : spec.offsets) offs.push_back({o.x(), o.y(), o.z()});
  j["offsets"] = std::move(offs);
  nlohmann::json lims = nlohmann::json::array();
  for (const auto& lim : spec.angle_limits) {
    lims.push_back({{lim[0].x(), lim[0].y()}, {lim[1].x(), lim[1].y()}, {lim[2].x(), lim[2].y()}});
  }
  j["angle_limits"] = std::move(lims);
  return j.dump(2);
}

SkeletonSpec skeleton_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("skeleton: invalid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::runtime_error("skeleton: unsupported version");
  }
  SkeletonSpec s;
  s.joint_count = j.at("joint_count").get<int>();
  s.root_index = j.at("root_index").get<int>();
  s.parents = j.at("parents").get<std::vector<int>>();
  s.pairing = j.at("pairing").get<std::vector<int>>();
  for (const auto& o : j.at("offsets")) {
    s.offsets.emplace_back(o[0].get<double>(), o[1].get<double>(), o[2].get<double>());
  }
  for (const auto& lim : j.at("angle_limits")) {
    s.angle_limits.push_back({Vec2(lim[0][0].get<double>(), lim[0][1].get<double>()),
                              Vec2(lim[1][0].get<double>(), lim[1][1].get<double>()),
                              Vec2(lim[2][0].get<double>(), lim[2][1].get<double>())});
  }
  s.validate();
  return s;
}

std::vector<Vec3> sample_relative_pose(const SkeletonSpec& spec, std::mt19937_64& rng) {
  const auto J = static_cast<size_t>(spec.joint_count);
  std::vector<Mat3> rot(J);
  std::vector<Vec3> pos(J, Vec3::Zero());
  std::vector<char> done(J, 0);

  // Draw all local rotations first so the consumption order is fixed.
  std::vector<Mat3> local(J);
  for (size_t jn = 0; jn < J; ++jn) {
    const auto& lim = spec.angle_limits[jn];
    const double ax = draw_in(rng, lim[0].x(), lim[0].y());
    const double ay = draw_in(rng, lim[1].x(), lim[1].y());
    const double az = draw_in(rng, lim[2].x(), lim[2].y());
    local[jn] = euler_xyz(ax, ay, az);
  }

  rot[static_cast<size_t>(spec.root_index)] = local[static_cast<size_t>(spec.root_index)];
  done[static_cast<size_t>(spec.root_index)] = 1;
  // Parents may appear after children in the spec; sweep until settled.
  bool progress = true;
  while (progress) {
    progress = false;
    for (size_t jn = 0; jn < J; ++jn) {
      if (done[jn]) continue;
      const auto parent = static_cast<size_t>(spec.parents[jn]);
      if (!done[parent]) continue;
      rot[jn] = rot[parent] * local[jn];
      pos[jn] = pos[parent] + rot[jn] * spec.offsets[jn];
      done[jn] = 1;
      progress = true;
    }
  }
  return pos;
}

std::vector<SceneSample> generate_scenes(const SkeletonSpec& spec, const SynthConfig& cfg) {
  spec.validate();
  if (cfg.n < 0) throw std::domain_error("generate_scenes: negative sample count");
  if (!(cfg.depth_range.x() > 0.0) || !(cfg.depth_range.x() <= cfg.depth_range.y())) {
    throw std::domain_error("generate_scenes: depth range must be positive and ordered");
  }
  if (!(cfg.alpha_range.x() > 0.0) || !(cfg.alpha_range.x() <= cfg.alpha_range.y())) {
    throw std::domain_error("generate_scenes: alpha range must be positive and ordered");
  }

  std::vector<SceneSample> out(static_cast<size_t>(cfg.n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cfg.n); ++i) {
    std::mt19937_64 rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(i));
    SceneSample s;
    for (int attempt = 0;; ++attempt) {
      const std::vector<Vec3> relative = sample_relative_pose(spec, rng);
      const double depth = draw_in(rng, cfg.depth_range.x(), cfg.depth_range.y());
      const double tx = draw_in(rng, -cfg.lateral_tangent.x(), cfg.lateral_tangent.x());
      const double ty = draw_in(rng, -cfg.lateral_tangent.y(), cfg.lateral_tangent.y());
      const double alpha = draw_in(rng, cfg.alpha_range.x(), cfg.alpha_range.y());
      const Vec3 root(depth * tx, depth * ty, depth);

      s.pose3d.root_index = spec.root_index;
      s.pose3d.joints.clear();
      for (const Vec3& rel : relative) s.pose3d.joints.push_back(root + rel);
      s.cam = CameraIntrinsics{alpha, cfg.principal.x(), cfg.principal.y()};

      bool in_front = true;
      for (const Vec3& p : s.pose3d.joints) in_front = in_front && p.z() > 0.0;
      if (in_front) break;
      if (attempt > 100) {
        throw std::domain_error("generate_scenes: cannot place pose in front of camera");
      }
    }
    s.pose2d = project(s.pose3d, s.cam);
    s.canonical_depth.value = s.pose3d.root().z() / s.cam.alpha;
    out[static_cast<size_t>(i)] = std::move(s);
  }
  return out;
}

std::vector<SceneSample> frozen_posture_scenes(const std::vector<Vec3>& relative,
                                               int root_index,
                                               const std::vector<double>& depths,
                                               double alpha, const Vec2& principal,
                                               const Vec2& lateral_tangent) {
  if (relative.size() < 2) throw std::domain_error("frozen_posture_scenes: need >= 2 joints");
  std::vector<SceneSample> out;
  out.reserve(depths.size());
  for (double depth : depths) {
    if (!(depth > 0.0)) throw std::domain_error("frozen_posture_scenes: non-positive depth");
    SceneSample s;
    const Vec3 root(depth * lateral_tangent.x(), depth * lateral_tangent.y(), depth);
    s.pose3d.root_index = root_index;
    for (const Vec3& rel : relative) s.pose3d.joints.push_back(root + rel);
    s.cam = CameraIntrinsics{alpha, principal.x(), principal.y()};
    s.pose2d = project(s.pose3d, s.cam);
    s.canonical_depth.value = s.pose3d.root().z() / alpha;
    out.push_back(std::move(s));
  }
  return out;
}

SceneSample flip_sample(const SceneSample& sample, const std::vector<int>& pairing) {
  check_pairing(pairing, sample.pose3d.joint_count());
  SceneSample out;
  out.cam = sample.cam;
  out.pose3d.root_index = sample.pose3d.root_index;
  out.pose3d.joints.resize(sample.pose3d.joints.size());
  for (size_t i = 0; i < sample.pose3d.joints.size(); ++i) {
    const Vec3& src = sample.pose3d.joints[static_cast<size_t>(pairing[i])];
    out.pose3d.joints[i] = Vec3(-src.x(), src.y(), src.z());
  }
  out.pose2d = project(out.pose3d, out.cam);
  out.canonical_depth.value = out.pose3d.root().z() / out.cam.alpha;
  return out;
}

}  // namespace poselift
