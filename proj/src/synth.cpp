#include "sweepsfm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sweepsfm {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_noise(int64_t ix, int64_t iy, uint64_t seed) {
  const uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(ix) * 0x9e3779b1ULL ^
                                                  static_cast<uint64_t>(iy) * 0x85ebca77ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Two-octave value noise in [0, 1].
double value_noise(double x, double y, uint64_t seed) {
  double out = 0.0;
  double amp = 2.0 / 3.0;
  for (int octave = 0; octave < 2; ++octave) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<int64_t>(fx);
    const auto iy = static_cast<int64_t>(fy);
    const double tx = smoothstep(x - fx);
    const double ty = smoothstep(y - fy);
    const double v00 = lattice_noise(ix, iy, seed + octave);
    const double v10 = lattice_noise(ix + 1, iy, seed + octave);
    const double v01 = lattice_noise(ix, iy + 1, seed + octave);
    const double v11 = lattice_noise(ix + 1, iy + 1, seed + octave);
    const double top = v00 + (v10 - v00) * tx;
    const double bot = v01 + (v11 - v01) * tx;
    out += amp * (top + (bot - top) * ty);
    amp *= 0.5;
    x *= 2.0;
    y *= 2.0;
  }
  return out;
}

double texture_albedo(const Texture& tex, double u, double v) {
  switch (tex.kind) {
    case Texture::Kind::kChecker: {
      const auto cu = static_cast<int64_t>(std::floor(u / tex.scale));
      const auto cv = static_cast<int64_t>(std::floor(v / tex.scale));
      return ((cu + cv) & 1) == 0 ? tex.albedo_a : tex.albedo_b;
    }
    case Texture::Kind::kNoise: {
      const double t = value_noise(u / tex.scale, v / tex.scale, tex.seed);
      return tex.albedo_b + (tex.albedo_a - tex.albedo_b) * t;
    }
    case Texture::Kind::kFlat:
      return tex.albedo_a;
  }
  return tex.albedo_a;
}

struct Hit {
  double depth = 0.0;       // camera-frame z
  Eigen::Vector3d normal;   // world frame, facing the ray origin
  double albedo = 0.0;
  bool valid = false;
};

// Ray o + s*d in world coordinates; s equals camera depth because the
// camera-frame direction has unit z.
Hit intersect(const Primitive& prim, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  Hit hit;
  const Pose world_to_local = prim.pose.inverse();
  const Eigen::Vector3d ol = world_to_local.apply(o);
  const Eigen::Vector3d dl = world_to_local.quaternion() * d;
  if (prim.kind == Primitive::Kind::kPlane) {
    if (std::abs(dl.z()) < 1e-12) return hit;
    const double s = -ol.z() / dl.z();
    if (s <= kZEps) return hit;
    const Eigen::Vector3d q = ol + s * dl;
    if (std::abs(q.x()) > prim.extent.x() || std::abs(q.y()) > prim.extent.y()) return hit;
    hit.depth = s;
    Eigen::Vector3d nl(0.0, 0.0, dl.z() > 0.0 ? -1.0 : 1.0);
    hit.normal = prim.pose.quaternion() * nl;
    hit.albedo = texture_albedo(prim.texture, q.x(), q.y());
    hit.valid = true;
  } else {
    const double r = prim.extent.x();
    const double a = dl.squaredNorm();
    const double b = 2.0 * ol.dot(dl);
    const double c = ol.squaredNorm() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return hit;
    const double sq = std::sqrt(disc);
    double s = (-b - sq) / (2.0 * a);
    if (s <= kZEps) s = (-b + sq) / (2.0 * a);
    if (s <= kZEps) return hit;
    const Eigen::Vector3d q = ol + s * dl;
    hit.depth = s;
    hit.normal = (prim.pose.quaternion() * q).normalized();
    if (hit.normal.dot(d) > 0.0) hit.normal = -hit.normal;
    const double theta = std::atan2(q.y(), q.x());
    const double phi = std::acos(std::clamp(q.z() / r, -1.0, 1.0));
    hit.albedo = texture_albedo(prim.texture, theta * r, phi * r);
    hit.valid = true;
  }
  return hit;
}

Hit trace(const SceneSpec& spec, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  Hit best;
  for (const Primitive& prim : spec.primitives) {
    const Hit h = intersect(prim, o, d);
    if (h.valid && (!best.valid || h.depth < best.depth)) best = h;
  }
  return best;
}

std::vector<double> split_doubles(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

uint64_t Rng::next() {
  // mt19937_64 would also do; a tiny splitmix chain keeps the state trivial.
  state_ = splitmix64(state_);
  return state_;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

RenderResult render(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& cam) {
  RenderResult out;
  out.image = Image(K.width, K.height, 1);
  out.depth = DepthMap(K.width, K.height);
  const Pose cam_to_world = cam.inverse();
  const Eigen::Vector3d origin = cam_to_world.translation();
  const Eigen::Vector3d light = spec.light_dir.normalized();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d dir_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d dir = cam_to_world.quaternion() * dir_cam;
      const Hit h = trace(spec, origin, dir);
      if (!h.valid) continue;
      out.depth.set(x, y, static_cast<float>(h.depth));
      const double lambert = std::max(0.0, h.normal.dot(light));
      const double shade = h.albedo * (spec.ambient + (1.0 - spec.ambient) * lambert);
      out.image.at(x, y) = static_cast<float>(std::clamp(shade, 0.0, 1.0));
    }
  }
  return out;
}

DepthMap render_depth(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& cam) {
  DepthMap out(K.width, K.height);
  const Pose cam_to_world = cam.inverse();
  const Eigen::Vector3d origin = cam_to_world.translation();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d dir_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Hit h = trace(spec, origin, cam_to_world.quaternion() * dir_cam);
      if (h.valid) out.set(x, y, static_cast<float>(h.depth));
    }
  }
  return out;
}

PerturbResult perturb(const Pose& pose, const DepthMap& depth,
                      const Eigen::Vector3d& rot_noise, const Eigen::Vector3d& trans_noise,
                      double depth_noise, uint64_t seed) {
  if (rot_noise.minCoeff() < 0.0 || trans_noise.minCoeff() < 0.0 || depth_noise < 0.0) {
    throw std::invalid_argument("perturb: noise magnitudes must be >= 0");
  }
  Rng rng(splitmix64(seed ^ 0x5eedULL));
  Eigen::Vector3d de, dt;
  for (int i = 0; i < 3; ++i) de[i] = rot_noise[i] * rng.sign();
  for (int i = 0; i < 3; ++i) dt[i] = trans_noise[i] * rng.sign();

  PerturbResult out;
  Eigen::Quaterniond q = pose.quaternion() * Eigen::Quaterniond(euler_zyx_to_rotation(de));
  q.normalize();
  out.pose = Pose(q, pose.translation() + dt);
  out.depth = depth;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double u = rng.uniform(-1.0, 1.0);
      if (!depth.valid_at(x, y)) continue;
      out.depth.set(x, y, static_cast<float>(depth.at(x, y) * (1.0 + depth_noise * u)));
    }
  }
  return out;
}

SceneSpec parse_scene_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("scene spec line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  SceneSpec spec;
  if (auto it = kv.find("light_dir"); it != kv.end()) {
    const auto v = split_doubles(it->second);
    if (v.size() != 3) throw std::runtime_error("scene spec: light_dir needs 3 numbers");
    spec.light_dir = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  if (auto it = kv.find("ambient"); it != kv.end()) {
    spec.ambient = std::stod(it->second);
  }

  for (int i = 0;; ++i) {
    const std::string prefix = "primitive" + std::to_string(i) + ".";
    if (kv.find(prefix + "type") == kv.end()) break;
    auto get = [&](const std::string& key, const std::string& fallback) {
      auto it = kv.find(prefix + key);
      return it == kv.end() ? fallback : it->second;
    };
    Primitive prim;
    const std::string type = get("type", "plane");
    if (type == "plane") {
      prim.kind = Primitive::Kind::kPlane;
    } else if (type == "sphere") {
      prim.kind = Primitive::Kind::kSphere;
    } else {
      throw std::runtime_error("scene spec: unknown primitive type '" + type + "'");
    }
    const auto pos = split_doubles(get("position", "0 0 0"));
    const auto eul = split_doubles(get("rotation_euler", "0 0 0"));
    const auto ext = split_doubles(get("extent", "1 1"));
    if (pos.size() != 3 || eul.size() != 3 || ext.empty()) {
      throw std::runtime_error("scene spec: bad position/rotation_euler/extent");
    }
    prim.pose = Pose(euler_zyx_to_rotation(Eigen::Vector3d(eul[0], eul[1], eul[2])),
                     Eigen::Vector3d(pos[0], pos[1], pos[2]));
    prim.extent = Eigen::Vector2d(ext[0], ext.size() > 1 ? ext[1] : ext[0]);
    const std::string tex = get("texture", "checker");
    if (tex == "checker") {
      prim.texture.kind = Texture::Kind::kChecker;
    } else if (tex == "noise") {
      prim.texture.kind = Texture::Kind::kNoise;
    } else if (tex == "flat") {
      prim.texture.kind = Texture::Kind::kFlat;
    } else {
      throw std::runtime_error("scene spec: unknown texture '" + tex + "'");
    }
    prim.texture.scale = std::stod(get("tex_scale", "0.5"));
    prim.texture.albedo_a = std::stod(get("albedo_a", "0.9"));
    prim.texture.albedo_b = std::stod(get("albedo_b", "0.15"));
    prim.texture.seed = std::stoull(get("tex_seed", "0"));
    spec.primitives.push_back(prim);
  }
  if (spec.primitives.empty()) {
    throw std::runtime_error("scene spec: no primitives");
  }
  return spec;
}

std::string write_scene_spec(const SceneSpec& spec) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "light_dir = %.17g %.17g %.17g\nambient = %.17g\n",
                spec.light_dir.x(), spec.light_dir.y(), spec.light_dir.z(), spec.ambient);
  os << buf;
  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& p = spec.primitives[i];
    const std::string pre = "primitive" + std::to_string(i) + ".";
    os << pre << "type = " << (p.kind == Primitive::Kind::kPlane ? "plane" : "sphere")
       << "\n";
    const Eigen::Vector3d t = p.pose.translation();
    const Eigen::Vector3d e = rotation_to_euler_zyx(p.pose.rotation());
    std::snprintf(buf, sizeof(buf), "%sposition = %.17g %.17g %.17g\n", pre.c_str(), t.x(),
                  t.y(), t.z());
    os << buf;
    std::snprintf(buf, sizeof(buf), "%srotation_euler = %.17g %.17g %.17g\n", pre.c_str(),
                  e.x(), e.y(), e.z());
    os << buf;
    std::snprintf(buf, sizeof(buf), "%sextent = %.17g %.17g\n", pre.c_str(), p.extent.x(),
                  p.extent.y());
    os << buf;
    const char* tex = p.texture.kind == Texture::Kind::kChecker
                          ? "checker"
                          : (p.texture.kind == Texture::Kind::kNoise ? "noise" : "flat");
    os << pre << "texture = " << tex << "\n";
    std::snprintf(buf, sizeof(buf), "%stex_scale = %.17g\n%salbedo_a = %.17g\n%salbedo_b = %.17g\n",
                  pre.c_str(), p.texture.scale, pre.c_str(), p.texture.albedo_a, pre.c_str(),
                  p.texture.albedo_b);
    os << buf;
    os << pre << "tex_seed = " << p.texture.seed << "\n";
  }
  return os.str();
}

SceneSpec preset_scene(const std::string& name, uint64_t seed) {
  Rng rng(splitmix64(seed * 1315423911ULL + 17));
  SceneSpec spec;

  auto add_background = [&](double z, Texture::Kind kind) {
    Primitive bg;
    bg.kind = Primitive::Kind::kPlane;
    bg.pose = Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.0, 0.0, z));
    bg.extent = Eigen::Vector2d(40.0, 40.0);
    bg.texture.kind = kind;
    bg.texture.scale = kind == Texture::Kind::kChecker ? 0.7 : 1.1;
    bg.texture.seed = seed + 101;
    spec.primitives.push_back(bg);
  };

  auto tilted_plane = [&](double z, double tilt_x, double tilt_y, double ex, double ey,
                          Texture::Kind kind, double scale) {
    Primitive p;
    p.kind = Primitive::Kind::kPlane;
    p.pose = Pose(euler_zyx_to_rotation(Eigen::Vector3d(tilt_x, tilt_y, 0.0)),
                  Eigen::Vector3d(0.0, 0.0, z));
    p.extent = Eigen::Vector2d(ex, ey);
    p.texture.kind = kind;
    p.texture.scale = scale;
    p.texture.seed = seed + 7;
    return p;
  };

  if (name == "plane") {
    add_background(8.0, Texture::Kind::kNoise);
    spec.primitives.push_back(
        tilted_plane(2.5, 0.15, -0.1, 3.0, 2.2, Texture::Kind::kChecker, 0.35));
  } else if (name == "box") {
    add_background(6.0, Texture::Kind::kNoise);
    Primitive left = tilted_plane(2.2, 0.0, 0.25, 0.9, 1.2, Texture::Kind::kChecker, 0.22);
    left.pose = Pose(left.pose.rotation(), Eigen::Vector3d(-0.8, 0.0, 2.2));
    spec.primitives.push_back(left);
    Primitive right = tilted_plane(3.2, -0.2, 0.0, 1.1, 0.9, Texture::Kind::kChecker, 0.3);
    right.pose = Pose(right.pose.rotation(), Eigen::Vector3d(0.9, 0.2, 3.2));
    spec.primitives.push_back(right);
  } else if (name == "spheres") {
    add_background(7.0, Texture::Kind::kChecker);
    Primitive s1;
    s1.kind = Primitive::Kind::kSphere;
    s1.pose = Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(-0.5, 0.1, 2.8));
    s1.extent = Eigen::Vector2d(0.7, 0.7);
    s1.texture.kind = Texture::Kind::kNoise;
    s1.texture.scale = 0.4;
    s1.texture.seed = seed + 23;
    spec.primitives.push_back(s1);
    Primitive s2 = s1;
    s2.pose = Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.8, -0.3, 4.0));
    s2.extent = Eigen::Vector2d(0.9, 0.9);
    s2.texture.kind = Texture::Kind::kChecker;
    s2.texture.scale = 0.25;
    spec.primitives.push_back(s2);
  } else if (name == "patch") {
    // Checkered backdrop with a flat rectangle in front covering roughly 30%
    // of the field of view: the geometric-consistency testbed.
    add_background(3.0, Texture::Kind::kChecker);
    spec.primitives.back().texture.scale = 0.3;
    Primitive flat = tilted_plane(2.4, 0.0, 0.0, 0.62, 0.47, Texture::Kind::kFlat, 1.0);
    flat.texture.albedo_a = 0.55;
    spec.primitives.push_back(flat);
  } else if (name == "random") {
    add_background(rng.uniform(5.0, 9.0),
                   rng.uniform() < 0.5 ? Texture::Kind::kNoise : Texture::Kind::kChecker);
    const int extra = 1 + static_cast<int>(rng.uniform() * 2.0);
    for (int i = 0; i < extra; ++i) {
      if (rng.uniform() < 0.6) {
        Primitive p = tilted_plane(rng.uniform(2.0, 4.0), rng.uniform(-0.3, 0.3),
                                   rng.uniform(-0.3, 0.3), rng.uniform(0.8, 2.0),
                                   rng.uniform(0.8, 2.0), Texture::Kind::kChecker,
                                   rng.uniform(0.2, 0.5));
        p.pose = Pose(p.pose.rotation(),
                      Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-0.7, 0.7),
                                      p.pose.translation().z()));
        spec.primitives.push_back(p);
      } else {
        Primitive s;
        s.kind = Primitive::Kind::kSphere;
        s.pose = Pose(Eigen::Quaterniond::Identity(),
                      Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-0.6, 0.6),
                                      rng.uniform(2.5, 4.5)));
        const double r = rng.uniform(0.4, 0.9);
        s.extent = Eigen::Vector2d(r, r);
        s.texture.kind = Texture::Kind::kNoise;
        s.texture.scale = rng.uniform(0.25, 0.6);
        s.texture.seed = seed + 37 + i;
        spec.primitives.push_back(s);
      }
    }
  } else {
    throw std::invalid_argument("preset_scene: unknown scene '" + name + "'");
  }
  return spec;
}

std::vector<Pose> preset_cameras(int n, uint64_t seed, double baseline) {
  if (n < 1) {
    throw std::invalid_argument("preset_cameras: need at least one camera");
  }
  Rng rng(splitmix64(seed ^ 0xca3e7aULL));
  std::vector<Pose> out;
  out.push_back(Pose());
  for (int i = 1; i < n; ++i) {
    const double side = (i % 2 == 0) ? -1.0 : 1.0;
    const Eigen::Vector3d t(side * baseline * (0.7 + 0.6 * rng.uniform()) *
                                (1.0 + (i - 1) / 2),
                            baseline * rng.uniform(-0.3, 0.3),
                            baseline * rng.uniform(-0.2, 0.2));
    // Slight yaw back toward the scene keeps the views overlapping.
    const Eigen::Vector3d e(rng.uniform(-0.01, 0.01), -side * rng.uniform(0.01, 0.03),
                            rng.uniform(-0.01, 0.01));
    out.emplace_back(euler_zyx_to_rotation(e), t);
  }
  return out;
}

}  // namespace sweepsfm
