#pragma once

#include <vector>

#include "fovnav/frustum.hpp"

namespace fovnav {

/// Rendered depth image. Depths are axial (projection onto the camera forward
/// axis) in meters; 0 marks a no-return pixel. Row-major, row 0 at the top
/// (maximum elevation), column 0 at the left edge of the FoV.
struct DepthFrame {
  int width = 0;
  int height = 0;
  Frustum pose;
  std::vector<float> depth;  // width * height

  float at(int row, int col) const { return depth[static_cast<size_t>(row) * width + col]; }
  float& at(int row, int col) { return depth[static_cast<size_t>(row) * width + col]; }
};

/// World-frame points from one frame, tagged with the frustum they were
/// observed through.
struct PointCloud {
  std::vector<Vec3> points;
  Frustum sensor_pose;
};

}  // namespace fovnav
