#pragma once

// Seeded synthetic scenes for tests, benchmarks and smoke runs.

#include <cstddef>
#include <cstdint>
#include <string>

#include "sns/dataset.hpp"
#include "sns/scene_maps.hpp"

namespace sns {

struct ConstantVelocityOptions {
  std::size_t pedestrians = 20;
  std::size_t frames = 120;
  std::size_t min_track = 20;  // frames per pedestrian, inclusive range
  std::size_t max_track = 40;
  double speed_min = 1.0;  // m/s
  double speed_max = 1.4;
  double extent = 12.0;  // start positions uniform in [0, extent]^2
  double frame_interval = 0.4;
  double noise = 0.0;  // gaussian position noise, meters
  std::uint64_t seed = 1;
};

// Straight-line walkers entering at random frames with random headings.
Scene constant_velocity_scene(std::string name, const ConstantVelocityOptions& options);

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(Vec2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
};

struct ObstacleOptions {
  std::size_t pedestrians = 24;
  std::size_t frames = 160;
  double width = 16.0;  // walkers cross the scene left to right
  double height = 10.0;
  double obstacle = 2.0;    // side length of the square obstacle
  double clearance = 0.6;   // distance kept from the obstacle edge
  double speed = 1.2;       // m/s
  double lane_spread = 1.2; // start y spread around the obstacle centre
  double pixel = 0.1;       // semantic raster resolution
  double frame_interval = 0.4;
  std::uint64_t seed = 1;
};

struct ObstacleScene {
  Scene scene;
  Rect obstacle;
  SemanticMap semantic;  // obstacle cells inside `obstacle`, sidewalk elsewhere
};

// Walkers heading for the obstacle bend around it and return to their lane.
// The obstacle centre is placed at a seeded position inside the scene.
ObstacleScene obstacle_scene(std::string name, const ObstacleOptions& options);

}  // namespace sns
