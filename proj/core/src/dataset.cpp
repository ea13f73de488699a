#include "sns/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "sns/error.hpp"

namespace sns {

std::size_t Scene::pedestrian_count() const {
  std::set<long> ids;
  for (const Track& t : tracks) ids.insert(t.ped_id);
  return ids.size();
}

std::size_t Scene::point_count() const {
  std::size_t n = 0;
  for (const Track& t : tracks) n += t.points.size();
  return n;
}

Vec2 Scene::centroid() const {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const Track& t : tracks) {
    for (const Vec2& p : t.points) {
      sx += p.x;
      sy += p.y;
      ++n;
    }
  }
  if (n == 0) return {};
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::vector<TrackPoint> Scene::points() const {
  std::vector<TrackPoint> out;
  for (std::size_t f = 0; f < frame_tracks.size(); ++f) {
    for (std::size_t ti : frame_tracks[f]) {
      const Track& t = tracks[ti];
      const Vec2& p = t.at(f);
      out.push_back({frame_ids[f], t.ped_id, p.x, p.y});
    }
  }
  return out;
}

std::array<Column, 4> parse_column_order(std::span<const std::string> names) {
  if (names.size() != 4) throw ConfigError("column order must name exactly 4 columns");
  std::array<Column, 4> cols{};
  std::set<Column> seen;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string& n = names[i];
    Column c;
    if (n == "frame") {
      c = Column::Frame;
    } else if (n == "id" || n == "ped" || n == "ped_id") {
      c = Column::Id;
    } else if (n == "x") {
      c = Column::X;
    } else if (n == "y") {
      c = Column::Y;
    } else {
      throw ConfigError("unknown column name '" + n + "'");
    }
    if (!seen.insert(c).second) throw ConfigError("column '" + n + "' listed twice");
    cols[i] = c;
  }
  return cols;
}

namespace {

bool parse_double(std::string_view text, double& out) {
  // from_chars rejects a leading '+'
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string& line) {
  std::replace(line.begin(), line.end(), ',', ' ');
  std::replace(line.begin(), line.end(), '\t', ' ');
  std::vector<std::string_view> fields;
  std::string_view rest(line);
  while (!rest.empty()) {
    const auto b = rest.find_first_not_of(" \r");
    if (b == std::string_view::npos) break;
    rest.remove_prefix(b);
    const auto e = rest.find_first_of(" \r");
    fields.push_back(rest.substr(0, e));
    if (e == std::string_view::npos) break;
    rest.remove_prefix(e);
  }
  return fields;
}

long to_integral_id(double v, const std::string& what, std::size_t line_no) {
  if (std::floor(v) != v) {
    throw DataError("line " + std::to_string(line_no) + ": " + what + " '" + std::to_string(v) +
                    "' is not an integer");
  }
  return static_cast<long>(v);
}

}  // namespace

Scene load_scene(const std::filesystem::path& path, const LoadOptions& options, std::string name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read annotation file " + path.string());
  if (name.empty()) name = path.stem().string();

  std::vector<TrackPoint> points;
  std::map<std::pair<long, long>, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (fields.size() < 4) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected 4 fields, found " + std::to_string(fields.size()));
    }
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!parse_double(fields[i], v[i])) {
        throw DataError(path.string() + " line " + std::to_string(line_no) +
                        ": non-numeric field '" + std::string(fields[i]) + "'");
      }
    }
    TrackPoint p;
    for (std::size_t i = 0; i < 4; ++i) {
      switch (options.columns[i]) {
        case Column::Frame: p.frame_id = to_integral_id(v[i], "frame id", line_no); break;
        case Column::Id: p.ped_id = to_integral_id(v[i], "pedestrian id", line_no); break;
        case Column::X: p.x = v[i]; break;
        case Column::Y: p.y = v[i]; break;
      }
    }
    auto [it, inserted] = first_line.emplace(std::make_pair(p.frame_id, p.ped_id), line_no);
    if (!inserted) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": duplicate record for frame " + std::to_string(p.frame_id) +
                      ", pedestrian " + std::to_string(p.ped_id) + " (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    points.push_back(p);
  }
  return scene_from_points(std::move(name), std::move(points), options);
}

Scene scene_from_points(std::string name, std::vector<TrackPoint> points,
                        const LoadOptions& options) {
  Scene scene;
  scene.name = std::move(name);
  scene.frame_interval = options.frame_interval;
  if (points.empty()) return scene;

  std::sort(points.begin(), points.end(), [](const TrackPoint& a, const TrackPoint& b) {
    return std::tie(a.ped_id, a.frame_id) < std::tie(b.ped_id, b.frame_id);
  });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].ped_id == points[i - 1].ped_id && points[i].frame_id == points[i - 1].frame_id) {
      throw DataError("scene " + scene.name + ": duplicate record for frame " +
                      std::to_string(points[i].frame_id) + ", pedestrian " +
                      std::to_string(points[i].ped_id));
    }
  }

  std::vector<long> distinct;
  for (const TrackPoint& p : points) distinct.push_back(p.frame_id);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const long first = distinct.front();
  long step = options.frame_step;
  if (step <= 0) {
    step = 0;
    for (std::size_t i = 1; i < distinct.size(); ++i) step = std::gcd(step, distinct[i] - first);
    if (step == 0) step = 1;
  }
  long decimate = 1;
  if (options.source_interval > 0.0 && options.source_interval < options.frame_interval) {
    const double ratio = options.frame_interval / options.source_interval;
    decimate = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(decimate)) > 1e-6) {
      throw ConfigError("frame_interval must be an integer multiple of source_interval");
    }
  }
  const long lattice_step = step * decimate;
  const std::size_t frame_count =
      static_cast<std::size_t>((distinct.back() - first) / lattice_step) + 1;
  scene.frame_ids.resize(frame_count);
  for (std::size_t k = 0; k < frame_count; ++k) {
    scene.frame_ids[k] = first + static_cast<long>(k) * lattice_step;
  }
  scene.frame_tracks.assign(frame_count, {});

  Track current;
  bool open = false;
  std::map<long, int> segments;
  auto close = [&]() {
    if (open && !current.points.empty()) scene.tracks.push_back(std::move(current));
    open = false;
    current = Track{};
  };
  for (const TrackPoint& p : points) {
    if ((p.frame_id - first) % step != 0) {
      throw DataError("scene " + scene.name + ": frame id " + std::to_string(p.frame_id) +
                      " is not on the frame lattice (step " + std::to_string(step) + ")");
    }
    if ((p.frame_id - first) % lattice_step != 0) continue;  // decimated away
    const auto frame = static_cast<std::size_t>((p.frame_id - first) / lattice_step);
    const bool continues = open && current.ped_id == p.ped_id && frame == current.last_frame() + 1;
    if (!continues) {
      close();
      current.ped_id = p.ped_id;
      current.segment = segments[p.ped_id]++;
      current.first_frame = frame;
      open = true;
    }
    current.points.push_back({p.x, p.y});
  }
  close();

  for (std::size_t ti = 0; ti < scene.tracks.size(); ++ti) {
    const Track& t = scene.tracks[ti];
    for (std::size_t f = t.first_frame; f <= t.last_frame(); ++f) scene.frame_tracks[f].push_back(ti);
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[64];
  auto write_double = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
  };
  for (const TrackPoint& p : scene.points()) {
    out << p.frame_id << ' ' << p.ped_id << ' ';
    write_double(p.x);
    out << ' ';
    write_double(p.y);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Window> make_windows(const Scene& scene, std::size_t stride, WindowSpec spec) {
  if (stride == 0) throw ConfigError("window stride must be >= 1");
  if (spec.obs_len == 0 || spec.obs_len >= spec.total_len) {
    throw ConfigError("window spec requires 0 < obs_len < total_len");
  }
  std::vector<Window> windows;
  const std::size_t n = scene.frame_count();
  if (n < spec.total_len) return windows;
  for (std::size_t start = 0; start + spec.total_len <= n; start += stride) {
    const std::size_t end = start + spec.total_len - 1;
    std::set<std::size_t> seen;
    Window w;
    w.scene = &scene;
    w.start = start;
    w.spec = spec;
    for (std::size_t f = start; f <= end; ++f) {
      for (std::size_t ti : scene.frame_tracks[f]) {
        if (!seen.insert(ti).second) continue;
        const Track& t = scene.tracks[ti];
        if (t.first_frame <= start && t.last_frame() >= end) {
          w.targets.push_back(ti);
        } else {
          w.context.push_back(ti);
        }
      }
    }
    if (w.targets.empty()) continue;
    std::sort(w.targets.begin(), w.targets.end());
    std::sort(w.context.begin(), w.context.end());
    windows.push_back(std::move(w));
  }
  return windows;
}

Split leave_one_out(std::span<const Scene> scenes, std::string_view held_out) {
  Split split;
  for (const Scene& s : scenes) {
    if (s.name == held_out) {
      split.test = &s;
    } else {
      split.train.push_back(&s);
    }
  }
  if (split.test == nullptr) {
    std::string known;
    for (const Scene& s : scenes) known += (known.empty() ? "" : ", ") + s.name;
    throw ConfigError("unknown held-out scene '" + std::string(held_out) + "' (known: " + known +
                      ")");
  }
  return split;
}

}  // namespace sns
