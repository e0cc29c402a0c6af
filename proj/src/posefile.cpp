#include "poselift/posefile.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace poselift {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

json vec2_list(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const Vec2& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

json vec3_list(const std::vector<Vec3>& pts) {
  json arr = json::array();
  for (const Vec3& p : pts) arr.push_back({p.x(), p.y(), p.z()});
  return arr;
}

std::vector<Vec2> parse_vec2_list(const json& arr) {
  std::vector<Vec2> out;
  for (const auto& p : arr) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

std::vector<Vec3> parse_vec3_list(const json& arr) {
  std::vector<Vec3> out;
  for (const auto& p : arr) {
    out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
  }
  return out;
}

}  // namespace

PoseFile read_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);

  PoseFile file;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      try {
        file.header.version = j.at("version").get<int>();
        file.header.joint_count = j.at("joint_count").get<int>();
        file.header.units = j.at("units").get<std::string>();
        if (j.contains("joint_names")) {
          file.header.joint_names = j["joint_names"].get<std::vector<std::string>>();
        }
      } catch (const json::exception& e) {
        fail(path, lineno, std::string("bad header: ") + e.what());
      }
      if (file.header.version != 1) fail(path, lineno, "unsupported version");
      if (file.header.joint_count < 2) fail(path, lineno, "joint_count must be >= 2");
      if (file.header.units != "px/mm") fail(path, lineno, "units must be \"px/mm\"");
      have_header = true;
      continue;
    }

    PoseRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.root_index = j.value("root_index", 0);
      if (j.contains("pose2d")) {
        Pose2D p;
        p.joints = parse_vec2_list(j["pose2d"]);
        rec.pose2d = std::move(p);
      }
      if (j.contains("pose3d")) {
        Pose3D p;
        p.joints = parse_vec3_list(j["pose3d"]);
        p.root_index = rec.root_index;
        rec.pose3d = std::move(p);
      }
      if (j.contains("camera")) {
        const auto& c = j["camera"];
        rec.camera = CameraIntrinsics{c.at("alpha").get<double>(), c.at("cx").get<double>(),
                                      c.at("cy").get<double>()};
      }
      if (j.contains("canonical_depth")) {
        rec.canonical_depth = j["canonical_depth"].get<double>();
      }
      if (j.contains("relative")) {
        rec.relative = parse_vec3_list(j["relative"]);
      }
    } catch (const json::exception& e) {
      fail(path, lineno, std::string("bad record: ") + e.what());
    }
    const auto J = static_cast<std::size_t>(file.header.joint_count);
    if (rec.pose2d && rec.pose2d->joints.size() != J) {
      fail(path, lineno, "pose2d length does not match header joint_count");
    }
    if (rec.pose3d && rec.pose3d->joints.size() != J) {
      fail(path, lineno, "pose3d length does not match header joint_count");
    }
    if (rec.relative && rec.relative->size() != J) {
      fail(path, lineno, "relative length does not match header joint_count");
    }
    if (rec.root_index < 0 || rec.root_index >= file.header.joint_count) {
      fail(path, lineno, "root_index out of range");
    }
    file.records.push_back(std::move(rec));
  }
  if (!have_header) throw std::runtime_error(path + ": missing header line");
  return file;
}

void write_pose_file(const PoseFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json header = {{"version", file.header.version},
                 {"joint_count", file.header.joint_count},
                 {"units", file.header.units}};
  if (!file.header.joint_names.empty()) header["joint_names"] = file.header.joint_names;
  out << header.dump() << '\n';

  for (const PoseRecord& rec : file.records) {
    json j = {{"id", rec.id}, {"root_index", rec.root_index}};
    if (rec.pose2d) j["pose2d"] = vec2_list(rec.pose2d->joints);
    if (rec.pose3d) j["pose3d"] = vec3_list(rec.pose3d->joints);
    if (rec.camera) {
      j["camera"] = {{"alpha", rec.camera->alpha}, {"cx", rec.camera->cx}, {"cy", rec.camera->cy}};
    }
    if (rec.canonical_depth) j["canonical_depth"] = *rec.canonical_depth;
    if (rec.relative) j["relative"] = vec3_list(*rec.relative);
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

PoseFile to_pose_file(const std::vector<SceneSample>& samples, const std::string& id_prefix,
                      int joint_count) {
  PoseFile file;
  file.header.joint_count = joint_count;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SceneSample& s = samples[i];
    PoseRecord rec;
    rec.id = id_prefix + std::to_string(i);
    rec.root_index = s.pose3d.root_index;
    rec.pose2d = s.pose2d;
    rec.pose3d = s.pose3d;
    rec.camera = s.cam;
    file.records.push_back(std::move(rec));
  }
  return file;
}

std::vector<SceneSample> scene_samples_from(const PoseFile& file) {
  std::vector<SceneSample> out;
  out.reserve(file.records.size());
  for (const PoseRecord& rec : file.records) {
    if (!rec.pose2d || !rec.pose3d || !rec.camera) {
      throw std::runtime_error("record " + rec.id + " lacks pose2d, pose3d, or camera");
    }
    SceneSample s;
    s.pose2d = *rec.pose2d;
    s.pose3d = *rec.pose3d;
    s.cam = *rec.camera;
    if (!(s.cam.alpha > 0.0)) {
      throw std::runtime_error("record " + rec.id + " has a non-positive focal length");
    }
    s.canonical_depth.value = s.pose3d.root().z() / s.cam.alpha;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace poselift
