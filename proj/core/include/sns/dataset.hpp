#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sns {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct TrackPoint {
  long frame_id = 0;
  long ped_id = 0;
  double x = 0.0;  // meters, world frame
  double y = 0.0;
};

// Contiguous run of one pedestrian over consecutive scene frames. A
// pedestrian whose annotations have gaps is split into several tracks.
struct Track {
  long ped_id = 0;
  int segment = 0;
  std::size_t first_frame = 0;  // index into Scene::frame_ids
  std::vector<Vec2> points;

  std::size_t last_frame() const { return first_frame + points.size() - 1; }
  bool present(std::size_t frame) const {
    return frame >= first_frame && frame < first_frame + points.size();
  }
  const Vec2& at(std::size_t frame) const { return points[frame - first_frame]; }
};

struct Scene {
  std::string name;
  // Regular lattice of annotation frame ids; frames without pedestrians
  // are kept so that gaps stay visible.
  std::vector<long> frame_ids;
  double frame_interval = 0.4;  // seconds between lattice frames
  std::vector<Track> tracks;    // sorted by (ped_id, segment)
  // Indices into `tracks` of the tracks present in each frame.
  std::vector<std::vector<std::size_t>> frame_tracks;

  std::size_t frame_count() const { return frame_ids.size(); }
  std::size_t pedestrian_count() const;
  std::size_t point_count() const;
  Vec2 centroid() const;
  // All track points in frame order.
  std::vector<TrackPoint> points() const;
};

enum class Column { Frame, Id, X, Y };

struct LoadOptions {
  std::array<Column, 4> columns{Column::Frame, Column::Id, Column::X, Column::Y};
  double frame_interval = 0.4;
  // Distance between consecutive annotated frame ids; 0 infers the gcd of
  // the observed differences.
  long frame_step = 0;
  // Seconds per annotated frame step. When set and smaller than
  // frame_interval, the lattice is decimated to frame_interval.
  double source_interval = 0.0;
};

// Parses "frame,id,x,y" style column names (also accepts ped/ped_id/id).
std::array<Column, 4> parse_column_order(std::span<const std::string> names);

Scene load_scene(const std::filesystem::path& path, const LoadOptions& options = {},
                 std::string name = {});
Scene scene_from_points(std::string name, std::vector<TrackPoint> points,
                        const LoadOptions& options = {});
// Writes "frame ped_id x y" records with shortest round-trip formatting.
void save_scene(const Scene& scene, const std::filesystem::path& path);

struct WindowSpec {
  std::size_t obs_len = 8;     // frames observed
  std::size_t total_len = 20;  // observed + predicted frames
  std::size_t pred_len() const { return total_len - obs_len; }
};

struct Window {
  const Scene* scene = nullptr;
  std::size_t start = 0;  // first frame index
  WindowSpec spec;
  std::vector<std::size_t> targets;  // tracks present in every frame of the window
  std::vector<std::size_t> context;  // tracks present in some frames only
};

std::vector<Window> make_windows(const Scene& scene, std::size_t stride = 1,
                                 WindowSpec spec = {});

struct Split {
  std::vector<const Scene*> train;
  const Scene* test = nullptr;
};

Split leave_one_out(std::span<const Scene> scenes, std::string_view held_out);

}  // namespace sns
