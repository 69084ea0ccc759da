#include "fovnav/render.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fovnav {

namespace {
// Depths this close to the apex cannot be represented (0 marks no-return).
constexpr double kMinReturn = 1e-6;

void render_row(const GroundTruthScene& scene, double time, DepthFrame& frame,
                int row) {
  const Frustum& f = frame.pose;
  const double tan_h = std::tan(f.h_fov / 2.0);
  const double tan_v = std::tan(f.v_fov / 2.0);
  const Vec3 fwd = f.forward(), left = f.left(), up = f.up();
  const double tz = tan_v * (frame.height - 1 - 2 * row) / frame.height;
  for (int col = 0; col < frame.width; ++col) {
    const double ty = tan_h * (frame.width - 1 - 2 * col) / frame.width;
    Vec3 dir = fwd + left * ty + up * tz;  // unit forward component: t = axial depth
    double t = scene_raycast(scene, time, f.origin, dir);
    bool valid = t >= f.depth_min && t >= kMinReturn && t <= f.depth_max;
    frame.at(row, col) = valid ? static_cast<float>(t) : 0.0f;
  }
}

DepthFrame render_impl(const GroundTruthScene& scene, double time,
                       const Frustum& pose, int width, int height,
                       bool parallel) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("render: non-positive frame size");
  DepthFrame frame;
  frame.width = width;
  frame.height = height;
  frame.pose = pose;
  frame.depth.assign(static_cast<std::size_t>(width) * height, 0.0f);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int row = 0; row < height; ++row) render_row(scene, time, frame, row);
  } else {
    for (int row = 0; row < height; ++row) render_row(scene, time, frame, row);
  }
  return frame;
}
}  // namespace

DepthFrame render_depth(const GroundTruthScene& scene, double time,
                        const Frustum& pose, int width, int height) {
  return render_impl(scene, time, pose, width, height, true);
}

DepthFrame render_depth_serial(const GroundTruthScene& scene, double time,
                               const Frustum& pose, int width, int height) {
  return render_impl(scene, time, pose, width, height, false);
}

PointCloud reproject(const DepthFrame& frame) {
  const Frustum& f = frame.pose;
  const double tan_h = std::tan(f.h_fov / 2.0);
  const double tan_v = std::tan(f.v_fov / 2.0);
  PointCloud cloud;
  cloud.sensor_pose = f;
  cloud.points.reserve(frame.depth.size());
  for (int row = 0; row < frame.height; ++row) {
    const double tz = tan_v * (frame.height - 1 - 2 * row) / frame.height;
    for (int col = 0; col < frame.width; ++col) {
      double d = frame.at(row, col);
      if (d <= 0.0) continue;
      const double ty = tan_h * (frame.width - 1 - 2 * col) / frame.width;
      cloud.points.push_back(f.from_camera(Vec3{d, d * ty, d * tz}));
    }
  }
  return cloud;
}

void add_noise(DepthFrame& frame, double sigma0, double d0, std::uint64_t seed) {
  if (sigma0 == 0.0) return;
  if (sigma0 < 0.0 || d0 <= 0.0) throw std::invalid_argument("bad noise parameters");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double lo = std::max(frame.pose.depth_min, kMinReturn);
  for (float& v : frame.depth) {
    if (v <= 0.0f) continue;
    double d = v;
    double sigma = sigma0 * (1.0 + (d / d0) * (d / d0));
    d += sigma * normal(rng);
    d = std::min(std::max(d, lo), frame.pose.depth_max);
    v = static_cast<float>(d);
  }
}

void save_frame(std::ostream& os, const DepthFrame& frame) {
  os << "fovnav-frame 1\n";
  os << "size " << frame.width << ' ' << frame.height << '\n';
  char buf[400];
  const Frustum& f = frame.pose;
  std::snprintf(buf, sizeof buf,
                "pose %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                f.origin.x, f.origin.y, f.origin.z, f.yaw, f.pitch, f.h_fov,
                f.v_fov, f.depth_min, f.depth_max);
  os << buf << "data\n";
  os.write(reinterpret_cast<const char*>(frame.depth.data()),
           static_cast<std::streamsize>(frame.depth.size() * sizeof(float)));
}

DepthFrame load_frame(std::istream& is) {
  std::string magic, tag;
  int version = 0;
  is >> magic >> version;
  if (magic != "fovnav-frame" || version != 1)
    throw std::runtime_error("frame load: bad header");
  int w = 0, h = 0;
  if (!(is >> tag >> w >> h) || tag != "size" || w <= 0 || h <= 0)
    throw std::runtime_error("frame load: bad size");
  double ox, oy, oz, yaw, pitch, hf, vf, dmin, dmax;
  if (!(is >> tag >> ox >> oy >> oz >> yaw >> pitch >> hf >> vf >> dmin >> dmax) ||
      tag != "pose")
    throw std::runtime_error("frame load: bad pose");
  if (!(is >> tag) || tag != "data") throw std::runtime_error("frame load: data");
  is.ignore(1);  // newline after "data"
  DepthFrame frame;
  frame.width = w;
  frame.height = h;
  frame.pose = Frustum(Vec3{ox, oy, oz}, yaw, pitch, hf, vf, dmin, dmax);
  frame.depth.resize(static_cast<std::size_t>(w) * h);
  is.read(reinterpret_cast<char*>(frame.depth.data()),
          static_cast<std::streamsize>(frame.depth.size() * sizeof(float)));
  if (!is) throw std::runtime_error("frame load: truncated data");
  return frame;
}

}  // namespace fovnav
