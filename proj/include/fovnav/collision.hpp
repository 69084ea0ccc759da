#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fovnav/occupancy_map.hpp"

namespace fovnav {

/// Recursive octree descent: true iff the segment, inflated by `radius`,
/// overlaps an occupied leaf. The segment is clipped to the map bounds first;
/// unknown space never collides. Inflation is a per-axis box grow (slab test),
/// deliberately conservative versus the Euclidean ball for radius > 0.
bool detect_collision(const OccupancyMap& map, const Segment& seg, double radius);

/// Flat reference oracle. At radius 0 it enumerates every leaf cell the
/// (clipped) segment passes through, which is exact; at radius > 0 it marches
/// samples at half-leaf spacing and applies the exact Euclidean ball test, so
/// naive_collision == true implies detect_collision == true but not conversely.
bool naive_collision(const OccupancyMap& map, const Segment& seg, double radius);

struct CollisionBenchRow {
  double length_voxels = 0.0;
  double detect_us = 0.0;
  double naive_us = 0.0;
};

/// Time both predicates over seeded random segments of the requested lengths
/// (in leaf-voxel units). Runs a 10% warm-up pass per bucket before timing.
std::vector<CollisionBenchRow> benchmark_collision(const OccupancyMap& map,
                                                   const std::vector<double>& lengths_voxels,
                                                   int trials, std::uint64_t seed);

/// Draw one segment of the given voxel length with both endpoints inside the
/// map bounds (rejection sampling). Shared by the benchmark and tests.
Segment sample_segment(const MapConfig& cfg, double length_voxels, std::uint64_t& state);

void write_benchmark_csv(std::ostream& os, const std::vector<CollisionBenchRow>& rows);

}  // namespace fovnav
