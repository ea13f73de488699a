#include "sns/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sns/error.hpp"

namespace sns {

Scene constant_velocity_scene(std::string name, const ConstantVelocityOptions& o) {
  if (o.min_track < 2 || o.max_track < o.min_track || o.max_track > o.frames) {
    throw ConfigError("constant-velocity scene: need 2 <= min_track <= max_track <= frames");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(o.min_track, o.max_track);
  std::normal_distribution<double> noise(0.0, o.noise > 0.0 ? o.noise : 1.0);
  const double pi = std::acos(-1.0);

  std::vector<TrackPoint> points;
  for (std::size_t p = 0; p < o.pedestrians; ++p) {
    const std::size_t len = length(rng);
    const std::size_t first = std::uniform_int_distribution<std::size_t>(0, o.frames - len)(rng);
    const double x0 = unit(rng) * o.extent, y0 = unit(rng) * o.extent;
    const double heading = unit(rng) * 2.0 * pi;
    const double speed = o.speed_min + unit(rng) * (o.speed_max - o.speed_min);
    const double step = speed * o.frame_interval;
    for (std::size_t k = 0; k < len; ++k) {
      double x = x0 + std::cos(heading) * step * static_cast<double>(k);
      double y = y0 + std::sin(heading) * step * static_cast<double>(k);
      if (o.noise > 0.0) {
        x += noise(rng) * o.noise;
        y += noise(rng) * o.noise;
      }
      points.push_back({static_cast<long>(first + k), static_cast<long>(p + 1), x, y});
    }
  }
  LoadOptions lo;
  lo.frame_interval = o.frame_interval;
  lo.frame_step = 1;
  return scene_from_points(std::move(name), std::move(points), lo);
}

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

ObstacleScene obstacle_scene(std::string name, const ObstacleOptions& o) {
  const double half = o.obstacle / 2.0;
  const double ramp = 2.0;
  if (o.width < o.obstacle + 2.0 * (ramp + 2.0) || o.height < o.obstacle + 2.0) {
    throw ConfigError("obstacle scene: scene too small for the obstacle");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double margin_x = half + ramp + 2.0, margin_y = half + 1.0;
  const double cx = margin_x + unit(rng) * (o.width - 2.0 * margin_x);
  const double cy = margin_y + unit(rng) * (o.height - 2.0 * margin_y);

  ObstacleScene out;
  out.obstacle = {cx - half, cy - half, cx + half, cy + half};
  const double step = o.speed * o.frame_interval;
  const auto len = static_cast<std::size_t>(std::floor(o.width / step)) + 1;
  if (len > o.frames) throw ConfigError("obstacle scene: frames too few for one crossing");

  std::vector<TrackPoint> points;
  for (std::size_t p = 0; p < o.pedestrians; ++p) {
    const std::size_t first = std::uniform_int_distribution<std::size_t>(0, o.frames - len)(rng);
    const double lane = cy + (2.0 * unit(rng) - 1.0) * o.lane_spread;
    double shift = 0.0;
    if (std::abs(lane - cy) < half + o.clearance) {
      const double side = lane >= cy ? 1.0 : -1.0;
      shift = cy + side * (half + o.clearance) - lane;
    }
    for (std::size_t k = 0; k < len; ++k) {
      const double x = step * static_cast<double>(k);
      const double in = smoothstep((x - (out.obstacle.x0 - ramp)) / ramp);
      const double outw = 1.0 - smoothstep((x - out.obstacle.x1) / ramp);
      const double y = lane + shift * std::min(in, outw);
      points.push_back({static_cast<long>(first + k), static_cast<long>(p + 1), x, y});
    }
  }
  LoadOptions lo;
  lo.frame_interval = o.frame_interval;
  lo.frame_step = 1;
  out.scene = scene_from_points(std::move(name), std::move(points), lo);

  GridTransform g;
  g.origin = {-2.0, -2.0};
  g.cell_size = o.pixel;
  g.cols = static_cast<std::size_t>(std::ceil((o.width + 4.0) / o.pixel));
  g.rows = static_cast<std::size_t>(std::ceil((o.height + 4.0) / o.pixel));
  out.semantic.transform = g;
  out.semantic.classes.assign(g.rows * g.cols, static_cast<std::uint8_t>(SemanticClass::Sidewalk));
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const Vec2 centre = g.cell_center({static_cast<std::ptrdiff_t>(r), static_cast<std::ptrdiff_t>(c)});
      if (out.obstacle.contains(centre)) {
        out.semantic.classes[r * g.cols + c] = static_cast<std::uint8_t>(SemanticClass::Obstacle);
      }
    }
  }
  return out;
}

}  // namespace sns
