#include "sweepsfm/bundle_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sweepsfm {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string frame_name(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d%s", i, ext);
  return buf;
}

std::ifstream open_binary(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open " + path.string());
  return f;
}

// libpng error handling: route through exceptions instead of longjmp traps.
void png_error_fn(png_structp png, png_const_charp msg) {
  throw std::runtime_error(std::string("png: ") + msg);
}
void png_warn_fn(png_structp, png_const_charp) {}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReader() {
    if (png != nullptr) png_destroy_read_struct(&png, &info, nullptr);
    if (fp != nullptr) std::fclose(fp);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriter() {
    if (png != nullptr) png_destroy_write_struct(&png, &info);
    if (fp != nullptr) std::fclose(fp);
  }
};

}  // namespace

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

DepthMap load_pfm(const fs::path& path) {
  std::ifstream f = open_binary(path);
  std::string magic;
  f >> magic;
  if (magic == "PF") fail("pfm: color PFM not supported: " + path.string());
  if (magic != "Pf") fail("pfm: bad magic in " + path.string());
  int w = 0, h = 0;
  double scale = 0.0;
  f >> w >> h >> scale;
  if (!f || w <= 0 || h <= 0) fail("pfm: malformed header in " + path.string());
  if (scale >= 0.0) fail("pfm: big-endian data not supported (scale must be negative): " +
                         path.string());
  f.get();  // single whitespace after the scale
  DepthMap out(w, h);
  std::vector<float> row(w);
  for (int y = h - 1; y >= 0; --y) {  // bottom-to-top
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
    if (!f) fail("pfm: truncated data in " + path.string());
    for (int x = 0; x < w; ++x) out.set(x, y, row[x]);
  }
  return out;
}

void save_pfm(const DepthMap& depth, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail("cannot open " + path.string() + " for writing");
  f << "Pf\n" << depth.width() << " " << depth.height() << "\n-1.0\n";
  std::vector<float> row(depth.width());
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) row[x] = depth.at(x, y);
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!f) fail("pfm: write failed for " + path.string());
}

DepthMap load_depth_png16(const fs::path& path) {
  PngReader r;
  r.fp = std::fopen(path.string().c_str(), "rb");
  if (r.fp == nullptr) fail("cannot open " + path.string());
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  r.info = png_create_info_struct(r.png);
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);
  const int w = static_cast<int>(png_get_image_width(r.png, r.info));
  const int h = static_cast<int>(png_get_image_height(r.png, r.info));
  if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(r.png, r.info) != 16) {
    fail("png: expected 16-bit grayscale depth in " + path.string());
  }
  png_set_swap(r.png);  // stored big-endian
  std::vector<uint16_t> row(w);
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y) {
    png_read_row(r.png, reinterpret_cast<png_bytep>(row.data()), nullptr);
    for (int x = 0; x < w; ++x) {
      out.set(x, y, row[x] == 0 ? DepthMap::kInvalid : row[x] / 1000.0f);
    }
  }
  return out;
}

void save_depth_png16(const DepthMap& depth, const fs::path& path) {
  PngWriter wtr;
  wtr.fp = std::fopen(path.string().c_str(), "wb");
  if (wtr.fp == nullptr) fail("cannot open " + path.string() + " for writing");
  wtr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  wtr.info = png_create_info_struct(wtr.png);
  png_init_io(wtr.png, wtr.fp);
  png_set_IHDR(wtr.png, wtr.info, depth.width(), depth.height(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wtr.png, wtr.info);
  png_set_swap(wtr.png);
  std::vector<uint16_t> row(depth.width());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid_at(x, y)) {
        row[x] = 0;
      } else {
        const double mm = std::lround(depth.at(x, y) * 1000.0);
        row[x] = static_cast<uint16_t>(std::clamp(mm, 1.0, 65535.0));
      }
    }
    png_write_row(wtr.png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(wtr.png, nullptr);
}

Image load_pnm(const fs::path& path) {
  std::ifstream f = open_binary(path);
  std::string magic;
  f >> magic;
  const int channels = magic == "P5" ? 1 : (magic == "P6" ? 3 : 0);
  if (channels == 0) fail("pnm: bad magic in " + path.string());
  int w = 0, h = 0, maxval = 0;
  f >> w >> h >> maxval;
  if (!f || w <= 0 || h <= 0 || maxval != 255) {
    fail("pnm: malformed header in " + path.string());
  }
  f.get();
  Image out(w, h, channels);
  std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!f) fail("pnm: truncated data in " + path.string());
    for (size_t k = 0; k < row.size(); ++k) {
      out.data[static_cast<size_t>(y) * w * channels + k] = row[k] / 255.0f;
    }
  }
  return out;
}

void save_pnm(const Image& image, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail("cannot open " + path.string() + " for writing");
  f << (image.channels == 1 ? "P5" : "P6") << "\n"
    << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (size_t k = 0; k < row.size(); ++k) {
      const float v = image.data[static_cast<size_t>(y) * row.size() + k];
      row[k] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) fail("pnm: write failed for " + path.string());
}

std::vector<Pose> load_pose_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) fail("cannot open " + path.string());
  std::vector<Pose> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    double qw, qx, qy, qz, tx, ty, tz;
    if (!(is >> qw >> qx >> qy >> qz >> tx >> ty >> tz)) {
      fail("pose file " + path.string() + " line " + std::to_string(lineno) +
           ": expected 7 numbers (qw qx qy qz tx ty tz)");
    }
    const Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      fail("pose file " + path.string() + " line " + std::to_string(lineno) +
           ": quaternion norm " + fmt_double(q.norm()) +
           " deviates from 1; normalize the quaternion");
    }
    out.emplace_back(q, Eigen::Vector3d(tx, ty, tz));
  }
  if (out.empty()) fail("pose file " + path.string() + ": no poses");
  return out;
}

void save_pose_file(const std::vector<Pose>& poses, const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail("cannot open " + path.string() + " for writing");
  for (const Pose& p : poses) {
    const Eigen::Quaterniond& q = p.quaternion();
    const Eigen::Vector3d& t = p.translation();
    f << fmt_double(q.w()) << " " << fmt_double(q.x()) << " " << fmt_double(q.y()) << " "
      << fmt_double(q.z()) << " " << fmt_double(t.x()) << " " << fmt_double(t.y()) << " "
      << fmt_double(t.z()) << "\n";
  }
  if (!f) fail("pose file: write failed for " + path.string());
}

CameraIntrinsics load_intrinsics(const fs::path& path, int width, int height) {
  std::ifstream f(path);
  if (!f) fail("cannot open " + path.string());
  double fx, fy, cx, cy;
  if (!(f >> fx >> fy >> cx >> cy)) {
    fail("intrinsics file " + path.string() + ": expected 4 numbers (fx fy cx cy)");
  }
  return CameraIntrinsics(fx, fy, cx, cy, width, height);
}

void save_intrinsics(const CameraIntrinsics& k, const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail("cannot open " + path.string() + " for writing");
  f << fmt_double(k.fx) << " " << fmt_double(k.fy) << " " << fmt_double(k.cx) << " "
    << fmt_double(k.cy) << "\n";
}

void write_ply(const fs::path& path, const std::vector<Eigen::Vector3d>& points,
               const std::vector<std::array<uint8_t, 3>>& colors) {
  if (points.size() != colors.size()) fail("write_ply: point/color count mismatch");
  std::ofstream f(path);
  if (!f) fail("cannot open " + path.string() + " for writing");
  f << "ply\nformat ascii 1.0\nelement vertex " << points.size()
    << "\nproperty float x\nproperty float y\nproperty float z\n"
       "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (size_t i = 0; i < points.size(); ++i) {
    f << static_cast<float>(points[i].x()) << " " << static_cast<float>(points[i].y()) << " "
      << static_cast<float>(points[i].z()) << " " << static_cast<int>(colors[i][0]) << " "
      << static_cast<int>(colors[i][1]) << " " << static_cast<int>(colors[i][2]) << "\n";
  }
  if (!f) fail("ply: write failed for " + path.string());
}

void depth_to_points(const DepthMap& depth, const CameraIntrinsics& k, const Pose& pose,
                     const Image* image, std::vector<Eigen::Vector3d>& points,
                     std::vector<std::array<uint8_t, 3>>& colors) {
  const Pose cam_to_world = pose.inverse();
  const int block = image != nullptr && image->width > depth.width()
                        ? image->width / depth.width()
                        : 1;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid_at(x, y)) continue;
      const Eigen::Vector3d p = unproject(k, x, y, depth.at(x, y));
      points.push_back(cam_to_world.apply(p));
      uint8_t g = 200;
      if (image != nullptr) {
        const int ix = std::min(x * block + block / 2, image->width - 1);
        const int iy = std::min(y * block + block / 2, image->height - 1);
        g = static_cast<uint8_t>(std::lround(image->luma(ix, iy) * 255.0f));
      }
      colors.push_back({g, g, g});
    }
  }
}

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail("bundle: " + dir.string() + " is not a directory");
  Bundle b;

  std::vector<fs::path> image_paths;
  for (int i = 0;; ++i) {
    fs::path p = dir / "images" / frame_name(i, ".pgm");
    if (!fs::exists(p)) p = dir / "images" / frame_name(i, ".ppm");
    if (!fs::exists(p)) break;
    image_paths.push_back(p);
  }
  if (image_paths.empty()) fail("bundle: no images under " + (dir / "images").string());
  for (const fs::path& p : image_paths) b.images.push_back(load_pnm(p));
  const int w = b.images.front().width;
  const int h = b.images.front().height;
  for (const Image& img : b.images) {
    if (img.width != w || img.height != h) fail("bundle: images disagree on resolution");
  }
  if (w % 4 != 0 || h % 4 != 0) {
    fail("bundle: image dimensions must be divisible by 4");
  }

  b.intrinsics = load_intrinsics(dir / "intrinsics.txt", w, h);
  b.init_poses = load_pose_file(dir / "poses_init.txt");
  if (b.init_poses.size() != b.images.size()) {
    fail("bundle: " + std::to_string(b.images.size()) + " images but " +
         std::to_string(b.init_poses.size()) + " initial poses");
  }

  auto load_depth_dir = [&](const std::string& sub) {
    std::vector<DepthMap> maps;
    for (size_t i = 0; i < b.images.size(); ++i) {
      fs::path p = dir / sub / frame_name(static_cast<int>(i), ".pfm");
      DepthMap d;
      if (fs::exists(p)) {
        d = load_pfm(p);
      } else {
        p = dir / sub / frame_name(static_cast<int>(i), ".png");
        if (!fs::exists(p)) {
          fail("bundle: missing depth map " + std::to_string(i) + " under " +
               (dir / sub).string());
        }
        d = load_depth_png16(p);
      }
      if (d.width() == w && d.height() == h) {
        d = downsample_depth(d, 4);
      } else if (d.width() != w / 4 || d.height() != h / 4) {
        fail("bundle: depth map " + p.string() + " is neither image nor feature resolution");
      }
      maps.push_back(std::move(d));
    }
    return maps;
  };
  b.init_depths = load_depth_dir("depth_init");

  if (fs::exists(dir / "poses_gt.txt")) {
    auto gt = load_pose_file(dir / "poses_gt.txt");
    if (gt.size() != b.images.size()) {
      fail("bundle: ground-truth pose count differs from image count");
    }
    b.gt_poses = std::move(gt);
  }
  if (fs::is_directory(dir / "depth_gt")) {
    b.gt_depths = load_depth_dir("depth_gt");
  }
  return b;
}

void save_results(const SceneState& state, const fs::path& dir) {
  fs::create_directories(dir / "depth");
  save_pose_file(state.poses, dir / "poses.txt");
  for (int i = 0; i < state.frame_count(); ++i) {
    save_pfm(state.depths[i], dir / "depth" / frame_name(i, ".pfm"));
  }
  std::vector<Eigen::Vector3d> points;
  std::vector<std::array<uint8_t, 3>> colors;
  const CameraIntrinsics kf = state.intrinsics.quarter();
  for (int i = 0; i < state.frame_count(); ++i) {
    depth_to_points(state.depths[i], kf, state.poses[i], &state.images[i], points, colors);
  }
  write_ply(dir / "cloud.ply", points, colors);
}

void load_results(const fs::path& dir, std::vector<Pose>& poses,
                  std::vector<DepthMap>& depths) {
  poses = load_pose_file(dir / "poses.txt");
  depths.clear();
  for (size_t i = 0; i < poses.size(); ++i) {
    const fs::path p = dir / "depth" / frame_name(static_cast<int>(i), ".pfm");
    if (!fs::exists(p)) fail("results: missing " + p.string());
    depths.push_back(load_pfm(p));
  }
}

}  // namespace sweepsfm
