// Copyright 2026 The occluded-crosswalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "crosswalk/harness.hpp"
#include "crosswalk/trace_io.hpp"

using namespace crosswalk;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = fs::path(CROSSWALK_SOURCE_DIR) / "config";

Scene lane_blocking_scene(double cy = 0.0, double width = 2.0) {
  Scene scene;
  scene.occluders.push_back({30.0, cy, 4.7, width, 0.0});
  scene.road = {-3.5, 5.0, 3.5, true};
  return scene;
}

double max_abs_lateral(const Path& path) {
  double m = 0.0;
  for (const auto& p : path.points()) m = std::max(m, std::abs(to_road(p).y));
  return m;
}

bool same_rows(const TraceRow& a, const TraceRow& b) {
  auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return eq(a.time, b.time) && eq(a.north, b.north) && eq(a.east, b.east) && eq(a.heading, b.heading) &&
         eq(a.ux, b.ux) && eq(a.s, b.s) && eq(a.e, b.e) && eq(a.ax, b.ax) && eq(a.steer, b.steer) &&
         eq(a.scale, b.scale) && a.unobservable_count == b.unobservable_count && a.count_bin == b.count_bin &&
         a.detected == b.detected && eq(a.p_crossing, b.p_crossing) && eq(a.belief_entropy, b.belief_entropy);
}

}  // namespace

TEST(AvoidancePath, StraightWithoutOccluder) {
  const Path path = build_avoidance_path(Scene{});
  EXPECT_NEAR(path.length(), 60.0, 0.1);
  EXPECT_EQ(max_abs_lateral(path), 0.0);
  EXPECT_DOUBLE_EQ(path.spacing(), 0.25);
}

TEST(AvoidancePath, ClearsOccluderByMargin) {
  for (double w : {1.0, 1.8, 2.2}) {
    const AvoidanceParams params;
    const Path path = build_avoidance_path(lane_blocking_scene(0.0, w), 0.9, params);
    EXPECT_GE(max_abs_lateral(path), w / 2 + params.clearance_margin);
    EXPECT_NEAR(path.length(), 60.0, 0.1);
    // returns to the lane centre by the end
    EXPECT_NEAR(to_road(path.points().back()).y, 0.0, 1e-9);
  }
}

TEST(AvoidancePath, CurvatureMatchesQuinticBound) {
  // offset h over ramp L with a quintic smoothstep: peak y'' is (10 / sqrt(3)) h / L^2
  const AvoidanceParams params;
  const Path path = build_avoidance_path(lane_blocking_scene(), 0.9, params);
  const double h = 1.0 + params.clearance_margin + 0.9;
  const double bound = 10.0 / std::sqrt(3.0) * h / (params.ramp_length * params.ramp_length);
  double worst = 0.0;
  for (double s = 1.0; s < path.length() - 1.0; s += 0.25) {
    worst = std::max(worst, std::abs(path.heading_at(s + 0.5) - path.heading_at(s - 0.5)));
  }
  EXPECT_LE(worst, bound * 1.01);
  EXPECT_GE(worst, bound * 0.9);
}

TEST(AvoidancePath, InfeasibleThrows) {
  Scene scene = lane_blocking_scene(0.0, 2.0);
  scene.road.left_y = 2.0;
  EXPECT_THROW(build_avoidance_path(scene), std::runtime_error);
}

TEST(SpeedControl, Examples) {
  EXPECT_EQ(speed_control(10.0, 0.5, 5.0, 1.0), 0.0);
  EXPECT_EQ(speed_control(10.0, 0.0, 5.0, 1.0), -3.0);
  EXPECT_EQ(speed_control(10.0, 1.0, 7.0, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(speed_control(10.0, 1.0, 9.0, 1.0), 1.0);
  EXPECT_THROW(speed_control(10.0, 1.5, 7.0, 1.0), std::invalid_argument);
  EXPECT_THROW(speed_control(10.0, 1.0, NAN, 1.0), std::domain_error);
}

TEST(SteerControl, ZeroOnStraightPath) {
  const Path path = Path::straight(60.0);
  VehicleState st;
  st.north = 10.0;
  st.s = 10.0;
  st.ux = 5.0;
  EXPECT_EQ(steer_control(st, path, VehicleParams{}), 0.0);
}

TEST(SteerControl, SteersBackTowardPath) {
  const Path path = Path::straight(60.0);
  VehicleState st;
  st.north = 10.0;
  st.east = -1.0;  // one metre left of a north-going path
  st.s = 10.0;
  st.e = 1.0;
  st.ux = 5.0;
  EXPECT_LT(steer_control(st, path, VehicleParams{}), 0.0);  // right turn
  st.east = 1.0;
  EXPECT_GT(steer_control(st, path, VehicleParams{}), 0.0);
}

TEST(SteerControl, ClampedAndAimsAtEnd) {
  const Path path = Path::straight(20.0);
  VehicleState st;
  st.north = 19.0;
  st.east = -6.0;
  st.s = 19.0;
  const ControllerParams ctrl;
  const double d = steer_control(st, path, VehicleParams{}, ctrl);
  EXPECT_LE(std::abs(d), ctrl.max_steer + 1e-15);
  EXPECT_LT(d, 0.0);
}

TEST(SteerControl, LaneChangeTracking) {
  const Path path = build_avoidance_path(lane_blocking_scene());
  const VehicleParams vp;
  VehicleState st;
  st.ux = 5.0;
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double steer = steer_control(st, path, vp);
    const auto out = step_dynamics(st, steer, speed_control(5.0, 1.0, st.ux, 1.0), 0.01, vp, path);
    st = out.state;
    worst = std::max(worst, std::abs(st.e));
    if (out.beyond_path) break;
  }
  EXPECT_GT(st.s, 55.0);
  EXPECT_LT(worst, 0.3);
}

TEST(OcclusionZone, EndsBeforeTheLine) {
  const auto cfg = load_scenario(kConfigDir / "scenarios" / "pomdp_hidden.cfg");
  const Path path = build_avoidance_path(cfg.scene);
  const auto [first, last] = compute_occlusion_zone(cfg.scene, path);
  EXPECT_EQ(first, 0);
  EXPECT_GT(last, 40);
  EXPECT_LT(last, 80);
  Scene open;
  const auto none = compute_occlusion_zone(open, build_avoidance_path(open));
  EXPECT_GT(none.first, none.second);
}

TEST(ScenarioConfig, LoadsRepoFiles) {
  for (const auto& e : fs::directory_iterator(kConfigDir / "scenarios")) {
    const auto cfg = load_scenario(e.path());
    EXPECT_EQ(cfg.decision_stride(), 50) << e.path();
  }
}

TEST(ScenarioConfig, RejectsBadPeriods) {
  ScenarioConfig cfg;
  cfg.decision_period = 0.505;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.decision_period = 0.5;
  cfg.duration = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunScenario, RowCountAndTimestamps) {
  ScenarioConfig cfg;
  cfg.policy = PolicyKind::kBaseline;
  cfg.scene = lane_blocking_scene(-1.6);
  cfg.scene.occluders[0].cx = 45.0;
  cfg.desired_speed = 2.0;  // slow enough not to reach the path end
  const auto t = run_scenario(cfg);
  ASSERT_EQ(t.rows.size(), 1500u);
  EXPECT_EQ(t.termination, "duration");
  for (std::size_t k = 0; k < t.rows.size(); ++k) EXPECT_DOUBLE_EQ(t.rows[k].time, k * 0.01);
}

TEST(RunScenario, Deterministic) {
  auto cfg = load_scenario(kConfigDir / "scenarios" / "pomdp_hidden.cfg");
  const auto solved = solve_model(effective_model_params(cfg));
  const auto a = run_scenario(cfg, &solved);
  const auto b = run_scenario(cfg, &solved);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) ASSERT_TRUE(same_rows(a.rows[k], b.rows[k])) << k;
}

TEST(RunScenario, OracleExposedStopsBeforeLine) {
  const auto t = run_scenario(load_scenario(kConfigDir / "scenarios" / "oracle_exposed.cfg"));
  EXPECT_LT(t.rows.back().ux, 0.05);
  EXPECT_LT(t.rows.back().s, t.crosswalk_line_s);
}

TEST(RunScenario, BaselineHiddenGoesThrough) {
  const auto t = run_scenario(load_scenario(kConfigDir / "scenarios" / "baseline_hidden.cfg"));
  EXPECT_GT(t.rows.back().s, t.crosswalk_line_s);
}

TEST(RunScenario, PomdpHiddenHoldsBack) {
  const auto cfg = load_scenario(kConfigDir / "scenarios" / "pomdp_hidden.cfg");
  const auto t = run_scenario(cfg);
  const double occluder_front = cfg.scene.occluders[0].max_x();
  for (const auto& r : t.rows) EXPECT_LT(r.s, occluder_front);
  EXPECT_LE(t.rows.back().ux, 2.0);
}

TEST(RunScenario, StuckTerminates) {
  // a long wall beside the lane shadows enough cells to saturate the count
  ScenarioConfig cfg;
  cfg.policy = PolicyKind::kBaseline;
  cfg.scene.occluders.push_back({35.0, 3.0, 70.0, 1.0, 0.0});
  const auto t = run_scenario(cfg);
  ASSERT_EQ(t.rows.front().scale, 0.0);
  EXPECT_EQ(t.termination, "stuck");
  EXPECT_LT(t.rows.size(), 400u);
}

TEST(TraceExport, EmptyTraceIsHeaderOnly) {
  std::ostringstream out;
  write_trace_csv(out, Trace{});
  EXPECT_EQ(out.str(), std::string(kTraceCsvHeader) + "\n");
}

TEST(TraceExport, CsvAndJsonRoundTrip) {
  auto cfg = load_scenario(kConfigDir / "scenarios" / "pomdp_exposed.cfg");
  cfg.duration = 3.0;
  const auto t = run_scenario(cfg);
  std::stringstream csv;
  write_trace_csv(csv, t);
  const auto rows = read_trace_csv(csv);
  ASSERT_EQ(rows.size(), t.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) ASSERT_TRUE(same_rows(rows[k], t.rows[k])) << k;

  const auto back = trace_from_json(nlohmann::json::parse(trace_to_json(t).dump()));
  EXPECT_EQ(back.scenario, t.scenario);
  EXPECT_EQ(back.termination, t.termination);
  EXPECT_EQ(back.crosswalk_line_s, t.crosswalk_line_s);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) ASSERT_TRUE(same_rows(back.rows[k], t.rows[k])) << k;
}

TEST(TraceExport, WritesCompanionFiles) {
  auto cfg = load_scenario(kConfigDir / "scenarios" / "baseline_exposed.cfg");
  cfg.duration = 1.0;
  const auto t = run_scenario(cfg);
  const auto dir = fs::temp_directory_path() / "crosswalk_export_test";
  fs::remove_all(dir);
  const auto files = export_trace(t, TraceFormat::kCsv, dir, "run", &cfg.scene);
  ASSERT_EQ(files.size(), 5u);
  for (const auto& f : files) EXPECT_TRUE(fs::exists(f)) << f;
  std::ifstream in(dir / "run.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 101);
  const auto json_files = export_trace(t, TraceFormat::kJson, dir, "run");
  EXPECT_EQ(json_files.front().extension(), ".json");
  fs::remove_all(dir);
}

TEST(TraceExport, ReportsPathOnFailure) {
  try {
    export_trace(Trace{}, TraceFormat::kCsv, "/proc/crosswalk_no_such_dir", "x");
    FAIL() << "expected an I/O error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/crosswalk_no_such_dir"), std::string::npos);
  }
}

TEST(TraceExport, RejectsBadCsv) {
  std::istringstream wrong_header("a,b\n");
  EXPECT_THROW(read_trace_csv(wrong_header), std::runtime_error);
  std::istringstream short_row(std::string(kTraceCsvHeader) + "\n1,2,3\n");
  EXPECT_THROW(read_trace_csv(short_row), std::runtime_error);
}
