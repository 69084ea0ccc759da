#pragma once

#include <cstdint>
#include <iosfwd>

#include "fovnav/pointcloud.hpp"
#include "fovnav/scene.hpp"

namespace fovnav {

/// Render a depth frame of the scene at time `time` from the given sensor
/// pose. Each pixel casts one ray through the center of a uniform-tangent
/// bin; the stored value is the axial depth of the nearest primitive, or 0
/// when nothing lies inside the depth window. Pixel (0,0) is the top-left
/// (maximum elevation, maximum leftward) corner.
DepthFrame render_depth(const GroundTruthScene& scene, double time,
                        const Frustum& pose, int width, int height);

/// Single-threaded reference renderer; bitwise-identical output.
DepthFrame render_depth_serial(const GroundTruthScene& scene, double time,
                               const Frustum& pose, int width, int height);

/// World-frame point per valid pixel, row-major order.
PointCloud reproject(const DepthFrame& frame);

/// Additive Gaussian depth noise with sigma(d) = sigma0 * (1 + (d/d0)^2),
/// clamped back into the depth window (never below 1e-6 so valid returns
/// stay distinguishable from no-return pixels). No-op when sigma0 == 0.
void add_noise(DepthFrame& frame, double sigma0, double d0, std::uint64_t seed);

/// Frame file: text header, then width*height native-endian float32 values.
void save_frame(std::ostream& os, const DepthFrame& frame);
DepthFrame load_frame(std::istream& is);

}  // namespace fovnav
