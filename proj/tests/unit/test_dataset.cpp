#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sns/dataset.hpp"
#include "sns/error.hpp"
#include "sns/synthetic.hpp"

using namespace sns;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const oracle::TempDir& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir.path / name;
  std::ofstream(p) << text;
  return p;
}

Scene track_scene(const std::vector<std::pair<long, std::pair<long, long>>>& peds) {
  // ped id -> [first, last] frame ids, unit frame step
  std::vector<TrackPoint> pts;
  for (const auto& [id, range] : peds) {
    for (long f = range.first; f <= range.second; ++f) {
      pts.push_back({f, id, static_cast<double>(f) * 0.5, static_cast<double>(id)});
    }
  }
  LoadOptions o;
  o.frame_step = 1;
  return scene_from_points("toy", pts, o);
}

}  // namespace

TEST_CASE("two-line file gives one track of length two") {
  oracle::TempDir dir("ds");
  const auto p = write_file(dir, "a.txt", "0 1 1.5 2.5\n10 1 2.0 3.0\n");
  const Scene s = load_scene(p);
  CHECK(s.name == "a");
  REQUIRE(s.tracks.size() == 1);
  CHECK(s.tracks[0].points.size() == 2);
  CHECK(s.frame_count() == 2);
  CHECK(s.tracks[0].points[1] == Vec2{2.0, 3.0});
}

TEST_CASE("comma separated with comments and blank lines") {
  oracle::TempDir dir("ds");
  const auto p = write_file(dir, "b.txt", "# header\n\n0,1,1,2\n1,1,2,3\n1,2,5,5\n");
  const Scene s = load_scene(p);
  CHECK(s.tracks.size() == 2);
  CHECK(s.pedestrian_count() == 2);
}

TEST_CASE("duplicate record names the line") {
  oracle::TempDir dir("ds");
  const auto p = write_file(dir, "dup.txt", "0 1 1 2\n1 1 2 3\n0 1 9 9\n");
  try {
    load_scene(p);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("duplicate") != std::string::npos);
  }
}

TEST_CASE("malformed lines are reported") {
  oracle::TempDir dir("ds");
  CHECK_THROWS_AS(load_scene(write_file(dir, "c.txt", "0 1 1\n")), DataError);
  CHECK_THROWS_AS(load_scene(write_file(dir, "d.txt", "0 1 abc 2\n")), DataError);
  CHECK_THROWS_AS(load_scene(write_file(dir, "e.txt", "0.5 1 1 2\n")), DataError);
  CHECK_THROWS_AS(load_scene(dir.path / "missing.txt"), DataError);
}

TEST_CASE("column order permutation") {
  oracle::TempDir dir("ds");
  const auto p = write_file(dir, "perm.txt", "7 0 1.5 2.5\n7 10 2.5 3.5\n");
  const std::vector<std::string> names{"id", "frame", "x", "y"};
  LoadOptions o;
  o.columns = parse_column_order(names);
  const Scene s = load_scene(p, o);
  REQUIRE(s.tracks.size() == 1);
  CHECK(s.tracks[0].ped_id == 7);
  CHECK(s.frame_ids == std::vector<long>{0, 10});
  const std::vector<std::string> bad{"frame", "frame", "x", "y"};
  CHECK_THROWS_AS(parse_column_order(bad), ConfigError);
  const std::vector<std::string> unknown{"frame", "id", "x", "z"};
  CHECK_THROWS_AS(parse_column_order(unknown), ConfigError);
}

TEST_CASE("gaps split a pedestrian into tracks") {
  std::vector<TrackPoint> pts{{0, 1, 0, 0}, {10, 1, 1, 0}, {30, 1, 2, 0}, {40, 1, 3, 0}};
  const Scene s = scene_from_points("gap", pts);
  CHECK(s.frame_ids == std::vector<long>{0, 10, 20, 30, 40});
  REQUIRE(s.tracks.size() == 2);
  CHECK(s.tracks[0].segment == 0);
  CHECK(s.tracks[1].segment == 1);
  CHECK(s.tracks[1].first_frame == 3);
  CHECK(s.frame_tracks[2].empty());
}

TEST_CASE("decimation to the frame interval") {
  std::vector<TrackPoint> pts;
  for (long f = 0; f < 12; ++f) pts.push_back({f, 1, static_cast<double>(f), 0});
  LoadOptions o;
  o.frame_interval = 0.4;
  o.source_interval = 0.1;
  const Scene s = scene_from_points("dec", pts, o);
  CHECK(s.frame_ids == std::vector<long>{0, 4, 8});
  REQUIRE(s.tracks.size() == 1);
  CHECK(s.tracks[0].points[2].x == 8.0);
  o.source_interval = 0.3;
  CHECK_THROWS_AS(scene_from_points("dec", pts, o), ConfigError);
}

TEST_CASE("load matches a line-scan count") {
  oracle::TempDir dir("ds");
  ConstantVelocityOptions o;
  o.seed = 4;
  const Scene s = constant_velocity_scene("cv", o);
  const auto path = dir.path / "cv.txt";
  save_scene(s, path);

  std::set<long> ids, frames;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    double f, id, x, y;
    ss >> f >> id >> x >> y;
    ids.insert(static_cast<long>(id));
    frames.insert(static_cast<long>(f));
  }
  LoadOptions lo;
  lo.frame_step = 1;
  const Scene back = load_scene(path, lo);
  CHECK(back.pedestrian_count() == ids.size());
  std::set<long> occupied;
  for (std::size_t f = 0; f < back.frame_count(); ++f) {
    if (!back.frame_tracks[f].empty()) occupied.insert(back.frame_ids[f]);
  }
  CHECK(occupied == frames);
}

TEST_CASE("save and reload round-trips track data") {
  oracle::TempDir dir("ds");
  ConstantVelocityOptions o;
  o.noise = 0.03;
  o.seed = 8;
  const Scene s = constant_velocity_scene("cv", o);
  save_scene(s, dir.path / "s.txt");
  LoadOptions lo;
  lo.frame_step = 1;
  const Scene back = load_scene(dir.path / "s.txt", lo, "cv");
  REQUIRE(back.tracks.size() == s.tracks.size());
  for (std::size_t k = 0; k < s.tracks.size(); ++k) {
    CHECK(back.tracks[k].ped_id == s.tracks[k].ped_id);
    CHECK(back.tracks[k].first_frame + (back.frame_ids.front() - s.frame_ids.front()) ==
          s.tracks[k].first_frame);
    CHECK(back.tracks[k].points == s.tracks[k].points);
  }
}

TEST_CASE("windows from one 20-frame track") {
  const Scene s = track_scene({{1, {0, 19}}});
  const auto w = make_windows(s);
  REQUIRE(w.size() == 1);
  CHECK(w[0].targets.size() == 1);
}

TEST_CASE("one 25-frame track gives 6 windows") {
  const Scene s = track_scene({{1, {0, 24}}});
  CHECK(make_windows(s).size() == 6);
}

TEST_CASE("partial presence is context only") {
  const Scene s = track_scene({{1, {0, 24}}, {2, {5, 15}}});
  const auto ws = make_windows(s);
  for (const Window& w : ws) {
    for (std::size_t t : w.targets) CHECK(s.tracks[t].ped_id == 1);
  }
  CHECK(ws[0].context.size() == 1);
}

TEST_CASE("windowing is exhaustive against enumeration") {
  ConstantVelocityOptions o;
  o.seed = 21;
  const Scene s = constant_velocity_scene("cv", o);
  const auto ws = make_windows(s);
  std::size_t expected = 0;
  for (std::size_t start = 0; start + 20 <= s.frame_count(); ++start) {
    bool any = false;
    for (const Track& t : s.tracks) any = any || (t.first_frame <= start && t.last_frame() >= start + 19);
    expected += any ? 1 : 0;
  }
  CHECK(ws.size() == expected);
  CHECK_THROWS_AS(make_windows(s, 0), ConfigError);
}

TEST_CASE("stride and custom spec") {
  const Scene s = track_scene({{1, {0, 24}}});
  CHECK(make_windows(s, 2).size() == 3);
  CHECK(make_windows(s, 1, WindowSpec{2, 4}).size() == 22);
  CHECK_THROWS_AS(make_windows(s, 1, WindowSpec{4, 4}), ConfigError);
}

TEST_CASE("leave one out") {
  std::vector<Scene> scenes;
  for (const char* n : {"ETH", "HOTEL", "UNIV", "ZARA-01", "ZARA-02"}) {
    Scene s;
    s.name = n;
    scenes.push_back(s);
  }
  const Split split = leave_one_out(scenes, "ETH");
  CHECK(split.test->name == "ETH");
  std::vector<std::string> train;
  for (const Scene* s : split.train) train.push_back(s->name);
  CHECK(train == std::vector<std::string>{"HOTEL", "UNIV", "ZARA-01", "ZARA-02"});

  std::set<std::string> tests;
  for (const Scene& s : scenes) {
    const Split sp = leave_one_out(scenes, s.name);
    CHECK(sp.train.size() + 1 == scenes.size());
    for (const Scene* t : sp.train) CHECK(t->name != sp.test->name);
    tests.insert(sp.test->name);
  }
  CHECK(tests.size() == 5);
  CHECK_THROWS_AS(leave_one_out(scenes, "NOPE"), ConfigError);
}
