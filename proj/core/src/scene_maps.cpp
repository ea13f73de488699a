#include "sns/scene_maps.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sns/error.hpp"

namespace sns {

using json = nlohmann::json;

// ---- GridTransform ----------------------------------------------------

void GridTransform::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ConfigError("grid cell size must be positive, got " + std::to_string(cell_size));
  }
  if (rows == 0 || cols == 0) throw ConfigError("grid must have at least one row and column");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw ConfigError("grid origin must be finite");
  }
}

CellIndex GridTransform::cell_of(Vec2 world) const {
  return {static_cast<std::ptrdiff_t>(std::floor((world.y - origin.y) / cell_size)),
          static_cast<std::ptrdiff_t>(std::floor((world.x - origin.x) / cell_size))};
}

bool GridTransform::contains(CellIndex cell) const {
  return cell.row >= 0 && cell.col >= 0 && static_cast<std::size_t>(cell.row) < rows &&
         static_cast<std::size_t>(cell.col) < cols;
}

std::optional<CellIndex> GridTransform::world_to_cell(Vec2 world) const {
  if (!std::isfinite(world.x) || !std::isfinite(world.y)) return std::nullopt;
  const double fr = std::floor((world.y - origin.y) / cell_size);
  const double fc = std::floor((world.x - origin.x) / cell_size);
  if (fr < 0.0 || fc < 0.0 || fr >= static_cast<double>(rows) || fc >= static_cast<double>(cols)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<std::ptrdiff_t>(fr), static_cast<std::ptrdiff_t>(fc)};
}

Vec2 GridTransform::cell_center(CellIndex cell) const {
  return {origin.x + (static_cast<double>(cell.col) + 0.5) * cell_size,
          origin.y + (static_cast<double>(cell.row) + 0.5) * cell_size};
}

GridTransform GridTransform::covering(std::span<const Scene* const> scenes, double cell_size,
                                      double margin) {
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (const Scene* s : scenes) {
    for (const Track& t : s->tracks) {
      for (const Vec2& p : t.points) {
        lo_x = std::min(lo_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_x = std::max(hi_x, p.x);
        hi_y = std::max(hi_y, p.y);
      }
    }
  }
  if (!std::isfinite(lo_x)) throw DataError("cannot derive a grid from scenes without points");
  GridTransform g;
  g.cell_size = cell_size;
  g.origin = {std::floor((lo_x - margin) / cell_size) * cell_size,
              std::floor((lo_y - margin) / cell_size) * cell_size};
  g.cols = static_cast<std::size_t>(std::ceil((hi_x + margin - g.origin.x) / cell_size)) + 1;
  g.rows = static_cast<std::size_t>(std::ceil((hi_y + margin - g.origin.y) / cell_size)) + 1;
  g.validate();
  return g;
}

// ---- navigation map ---------------------------------------------------

SmoothingKernel SmoothingKernel::uniform(std::size_t size) {
  SmoothingKernel k;
  k.size = size;
  k.weights.assign(size * size, 1.0 / static_cast<double>(size * size));
  k.validate();
  return k;
}

void SmoothingKernel::validate() const {
  if (size == 0 || size % 2 == 0) {
    throw ConfigError("smoothing kernel must be odd-sided, got " + std::to_string(size));
  }
  if (weights.size() != size * size) throw ConfigError("smoothing kernel weight count mismatch");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("smoothing weights must be >= 0");
  }
}

NavScale parse_nav_scale(std::string_view name) {
  if (name == "raw") return NavScale::Raw;
  if (name == "log1p") return NavScale::Log1p;
  if (name == "maxnorm") return NavScale::MaxNorm;
  throw ConfigError("unknown navigation scale '" + std::string(name) + "' (raw|log1p|maxnorm)");
}

std::string_view to_string(NavScale scale) {
  switch (scale) {
    case NavScale::Raw: return "raw";
    case NavScale::Log1p: return "log1p";
    case NavScale::MaxNorm: return "maxnorm";
  }
  return "?";
}

double NavigationMap::total() const {
  double t = 0.0;
  for (double v : values) t += v;
  return t;
}

std::vector<double> raw_crossing_counts(std::span<const Scene* const> scenes,
                                        const GridTransform& transform) {
  transform.validate();
  std::vector<double> counts(transform.rows * transform.cols, 0.0);
  for (const Scene* s : scenes) {
    for (const Track& t : s->tracks) {
      for (const Vec2& p : t.points) {
        if (auto cell = transform.world_to_cell(p)) counts[transform.flat(*cell)] += 1.0;
      }
    }
  }
  return counts;
}

NavigationMap smooth_counts(const GridTransform& transform, std::span<const double> counts,
                            const SmoothingKernel& kernel) {
  transform.validate();
  kernel.validate();
  if (counts.size() != transform.rows * transform.cols) {
    throw DimensionError("count grid does not match transform extents");
  }
  NavigationMap map;
  map.transform = transform;
  map.values.assign(counts.size(), 0.0);
  const auto half = static_cast<std::ptrdiff_t>(kernel.size / 2);
  const auto rows = static_cast<std::ptrdiff_t>(transform.rows);
  const auto cols = static_cast<std::ptrdiff_t>(transform.cols);
  const auto ksize = static_cast<std::ptrdiff_t>(kernel.size);
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t a = 0; a < ksize; ++a) {
        const std::ptrdiff_t rr = r + a - half;
        if (rr < 0 || rr >= rows) continue;
        for (std::ptrdiff_t b = 0; b < ksize; ++b) {
          const std::ptrdiff_t cc = c + b - half;
          if (cc < 0 || cc >= cols) continue;
          acc += kernel.weights[static_cast<std::size_t>(a * ksize + b)] *
                 counts[static_cast<std::size_t>(rr * cols + cc)];
        }
      }
      map.values[static_cast<std::size_t>(r * cols + c)] = acc;
    }
  }
  map.max_value = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  return map;
}

NavigationMap build_navigation_map(std::span<const Scene* const> scenes,
                                   const GridTransform& transform, const SmoothingKernel& kernel) {
  std::size_t points = 0;
  for (const Scene* s : scenes) points += s->point_count();
  if (points == 0) {
    throw DataError("navigation map needs at least one training point; got an empty training set");
  }
  const auto counts = raw_crossing_counts(scenes, transform);
  return smooth_counts(transform, counts, kernel);
}

NavigationMapBuilder::NavigationMapBuilder(GridTransform transform, SmoothingKernel kernel)
    : kernel_(std::move(kernel)) {
  transform.validate();
  kernel_.validate();
  map_.transform = transform;
  map_.values.assign(transform.rows * transform.cols, 0.0);
}

bool NavigationMapBuilder::add_point(Vec2 world) {
  const auto cell = map_.transform.world_to_cell(world);
  if (!cell) return false;
  const auto half = static_cast<std::ptrdiff_t>(kernel_.size / 2);
  const auto ksize = static_cast<std::ptrdiff_t>(kernel_.size);
  const auto rows = static_cast<std::ptrdiff_t>(map_.transform.rows);
  const auto cols = static_cast<std::ptrdiff_t>(map_.transform.cols);
  // out(r, c) gains w[a][b] where the point sits at (r + a - half, c + b - half)
  for (std::ptrdiff_t a = 0; a < ksize; ++a) {
    const std::ptrdiff_t r = cell->row - a + half;
    if (r < 0 || r >= rows) continue;
    for (std::ptrdiff_t b = 0; b < ksize; ++b) {
      const std::ptrdiff_t c = cell->col - b + half;
      if (c < 0 || c >= cols) continue;
      double& v = map_.values[static_cast<std::size_t>(r * cols + c)];
      v += kernel_.weights[static_cast<std::size_t>(a * ksize + b)];
      map_.max_value = std::max(map_.max_value, v);
    }
  }
  ++points_added_;
  return true;
}

double scale_navigation_value(double value, NavScale scale, double max_value) {
  switch (scale) {
    case NavScale::Raw: return value;
    case NavScale::Log1p: return std::log1p(value);
    case NavScale::MaxNorm: return max_value > 0.0 ? value / max_value : 0.0;
  }
  return value;
}

namespace {

constexpr std::string_view kNavMagic = "SNSNAVMAP 1";

void write_doubles(std::ostream& out, std::span<const double> values) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

}  // namespace

void save_navigation_map(const NavigationMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  json header = {{"origin", {map.transform.origin.x, map.transform.origin.y}},
                 {"cell_size", map.transform.cell_size},
                 {"rows", map.transform.rows},
                 {"cols", map.transform.cols},
                 {"encoding", "f64le"}};
  out << kNavMagic << '\n' << header.dump() << '\n';
  write_doubles(out, map.values);
  if (!out) throw DataError("write failed: " + path.string());
}

NavigationMap load_navigation_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read navigation map " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kNavMagic) throw DataError(path.string() + ": not a navigation map file");
  std::getline(in, header_line);
  NavigationMap map;
  try {
    const json h = json::parse(header_line);
    map.transform.origin = {h.at("origin").at(0).get<double>(), h.at("origin").at(1).get<double>()};
    map.transform.cell_size = h.at("cell_size").get<double>();
    map.transform.rows = h.at("rows").get<std::size_t>();
    map.transform.cols = h.at("cols").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed header: " + e.what());
  }
  map.transform.validate();
  map.values.resize(map.transform.rows * map.transform.cols);
  in.read(reinterpret_cast<char*>(map.values.data()),
          static_cast<std::streamsize>(map.values.size() * sizeof(double)));
  if (!in) throw DataError(path.string() + ": truncated payload");
  for (double v : map.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(path.string() + ": invalid map value");
  }
  map.max_value = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  return map;
}

void write_navigation_preview(const NavigationMap& map, const std::filesystem::path& path) {
  Raster img;
  img.rows = map.transform.rows;
  img.cols = map.transform.cols;
  img.values.resize(img.rows * img.cols);
  const double top = std::log1p(map.max_value);
  for (std::size_t r = 0; r < img.rows; ++r) {
    for (std::size_t c = 0; c < img.cols; ++c) {
      const double v = top > 0.0 ? std::log1p(map.at(r, c)) / top : 0.0;
      img.values[(img.rows - 1 - r) * img.cols + c] = static_cast<int>(std::lround(v * 255.0));
    }
  }
  save_pgm(img, path);
}

// ---- semantic map -----------------------------------------------------

namespace {
constexpr std::array<std::string_view, kSemanticClassCount> kClassNames = {
    "grass", "building", "obstacle", "bench", "car", "road", "sidewalk"};
}

std::string_view class_name(SemanticClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<SemanticClass> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<SemanticClass>(i);
  }
  return std::nullopt;
}

std::array<double, kSemanticClassCount> one_hot(std::size_t class_index) {
  if (class_index >= kSemanticClassCount) {
    throw DomainError("semantic class index " + std::to_string(class_index) +
                      " outside [0, 6]");
  }
  std::array<double, kSemanticClassCount> v{};
  v[class_index] = 1.0;
  return v;
}

std::array<std::size_t, kSemanticClassCount> SemanticMap::histogram() const {
  std::array<std::size_t, kSemanticClassCount> h{};
  for (std::uint8_t c : classes) ++h[c];
  return h;
}

namespace {

// Next whitespace-delimited token, skipping '#' comments (PGM header rules).
std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int to_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": expected an integer, found '" + tok + "'");
  }
}

}  // namespace

Raster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read raster " + path.string());
  Raster r;
  const int c0 = in.peek();
  if (c0 == 'P') {
    const std::string magic = next_token(in);
    if (magic != "P2" && magic != "P5") throw DataError(path.string() + ": unsupported PGM " + magic);
    const int w = to_int(next_token(in), path);
    const int h = to_int(next_token(in), path);
    const int maxval = to_int(next_token(in), path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
      throw DataError(path.string() + ": unsupported PGM geometry or depth");
    }
    r.rows = static_cast<std::size_t>(h);
    r.cols = static_cast<std::size_t>(w);
    r.values.resize(r.rows * r.cols);
    if (magic == "P5") {
      std::vector<unsigned char> bytes(r.values.size());
      in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!in) throw DataError(path.string() + ": truncated PGM payload");
      std::copy(bytes.begin(), bytes.end(), r.values.begin());
    } else {
      for (int& v : r.values) {
        const std::string tok = next_token(in);
        if (tok.empty()) throw DataError(path.string() + ": truncated PGM payload");
        v = to_int(tok, path);
      }
    }
    return r;
  }
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<int> row;
    std::string tok;
    while (ls >> tok) row.push_back(to_int(tok, path));
    if (row.empty()) continue;
    if (r.cols == 0) r.cols = row.size();
    if (row.size() != r.cols) {
      throw DataError(path.string() + ": ragged text raster at row " + std::to_string(r.rows));
    }
    r.values.insert(r.values.end(), row.begin(), row.end());
    ++r.rows;
  }
  if (r.rows == 0) throw DataError(path.string() + ": empty raster");
  return r;
}

void save_pgm(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << raster.cols << ' ' << raster.rows << "\n255\n";
  std::vector<unsigned char> bytes(raster.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::clamp(raster.values[i], 0, 255));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::map<int, SemanticClass> load_legend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read legend " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(path.string() + ": legend must be a JSON object");
  std::map<int, SemanticClass> legend;
  for (const auto& [key, value] : j.items()) {
    const int raster_value = to_int(key, path);
    if (!value.is_string()) throw DataError(path.string() + ": class for " + key + " must be a string");
    const auto name = value.get<std::string>();
    const auto cls = class_from_name(name);
    if (!cls) {
      throw DataError(path.string() + ": unknown semantic class '" + name +
                      "' (expected grass, building, obstacle, bench, car, road, sidewalk)");
    }
    legend[raster_value] = *cls;
  }
  return legend;
}

SemanticMap semantic_map_from_raster(const Raster& raster,
                                     const std::map<int, SemanticClass>& legend,
                                     GridTransform transform) {
  if (transform.rows == 0 && transform.cols == 0) {
    transform.rows = raster.rows;
    transform.cols = raster.cols;
  }
  transform.validate();
  if (transform.rows != raster.rows || transform.cols != raster.cols) {
    throw ConfigError("semantic raster is " + std::to_string(raster.rows) + "x" +
                      std::to_string(raster.cols) + " but its transform declares " +
                      std::to_string(transform.rows) + "x" + std::to_string(transform.cols));
  }
  std::vector<int> missing;
  SemanticMap map;
  map.transform = transform;
  map.classes.resize(raster.values.size());
  for (std::size_t r = 0; r < raster.rows; ++r) {
    for (std::size_t c = 0; c < raster.cols; ++c) {
      const int v = raster.values[r * raster.cols + c];
      const auto it = legend.find(v);
      if (it == legend.end()) {
        if (std::find(missing.begin(), missing.end(), v) == missing.end()) missing.push_back(v);
        continue;
      }
      // image row 0 is the top of the scene (largest y)
      map.classes[(raster.rows - 1 - r) * raster.cols + c] = static_cast<std::uint8_t>(it->second);
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string list;
    for (int v : missing) list += (list.empty() ? "" : ", ") + std::to_string(v);
    throw DataError("raster values absent from legend: " + list);
  }
  return map;
}

SemanticMap load_semantic_map(const std::filesystem::path& raster_path,
                              const std::filesystem::path& legend_path, GridTransform transform) {
  return semantic_map_from_raster(load_raster(raster_path), load_legend(legend_path), transform);
}

}  // namespace sns
