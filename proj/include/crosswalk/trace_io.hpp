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

#ifndef CROSSWALK__TRACE_IO_HPP_
#define CROSSWALK__TRACE_IO_HPP_

#include <charconv>
#include <cstdint>
#include <limits>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crosswalk/harness.hpp"

namespace crosswalk {

// Trace CSV columns, one row per control step:
//   time [s], north [m], east [m], heading [rad, ccw from north], ux [m/s],
//   s [m, path arc], e [m, left of path], ax [m/s^2], steer [rad, + left],
//   scale [-], unobservable_count [cells], count_bin [0-9], detected [0/1],
//   p_crossing [-], belief_entropy [nats]   (last two are nan unless pomdp)
inline constexpr std::string_view kTraceCsvHeader =
    "time,north,east,heading,ux,s,e,ax,steer,scale,unobservable_count,count_bin,detected,p_crossing,belief_entropy";

enum class TraceFormat { kCsv, kJson };

inline TraceFormat parse_trace_format(std::string_view name) {
  if (name == "csv") return TraceFormat::kCsv;
  if (name == "json") return TraceFormat::kJson;
  throw std::invalid_argument("unknown trace format '" + std::string(name) + "' (expected csv or json)");
}

namespace detail {

inline void put(std::ostream& out, double v) { out << format_double(v); }

inline double parse_field(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw std::runtime_error("trace csv line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("error while writing '" + p.string() + "'");
}

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    for (double v : {r.time, r.north, r.east, r.heading, r.ux, r.s, r.e, r.ax, r.steer, r.scale}) {
      detail::put(out, v);
      out << ',';
    }
    out << r.unobservable_count << ',' << r.count_bin << ',' << (r.detected ? 1 : 0) << ',';
    detail::put(out, r.p_crossing);
    out << ',';
    detail::put(out, r.belief_entropy);
    out << '\n';
  }
}

/// Parses the rows of a trace CSV (metadata is not part of the CSV).
inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader) throw std::runtime_error("trace csv: missing or unexpected header");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(detail::parse_field(rest.substr(0, comma), lineno));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 15) throw std::runtime_error("trace csv line " + std::to_string(lineno) + ": expected 15 fields");
    TraceRow r;
    r.time = f[0];
    r.north = f[1];
    r.east = f[2];
    r.heading = f[3];
    r.ux = f[4];
    r.s = f[5];
    r.e = f[6];
    r.ax = f[7];
    r.steer = f[8];
    r.scale = f[9];
    r.unobservable_count = static_cast<int>(f[10]);
    r.count_bin = static_cast<int>(f[11]);
    r.detected = f[12] != 0.0;
    r.p_crossing = f[13];
    r.belief_entropy = f[14];
    rows.push_back(r);
  }
  return rows;
}

inline nlohmann::json trace_to_json(const Trace& trace) {
  nlohmann::json j;
  j["scenario"] = trace.scenario;
  j["policy"] = std::string(to_string(trace.policy));
  j["seed"] = trace.seed;
  j["control_period"] = trace.control_period;
  j["decision_period"] = trace.decision_period;
  j["desired_speed"] = trace.desired_speed;
  j["crosswalk_line_s"] = trace.crosswalk_line_s;
  j["crossing_active"] = trace.crossing_active;
  j["termination"] = trace.termination;
  j["events"] = trace.events;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    rows.push_back({{"time", r.time},
                    {"north", r.north},
                    {"east", r.east},
                    {"heading", r.heading},
                    {"ux", r.ux},
                    {"s", r.s},
                    {"e", r.e},
                    {"ax", r.ax},
                    {"steer", r.steer},
                    {"scale", r.scale},
                    {"unobservable_count", r.unobservable_count},
                    {"count_bin", r.count_bin},
                    {"detected", r.detected},
                    {"p_crossing", detail::number_or_null(r.p_crossing)},
                    {"belief_entropy", detail::number_or_null(r.belief_entropy)}});
  }
  return j;
}

inline Trace trace_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  Trace t;
  t.scenario = j.at("scenario").get<std::string>();
  t.policy = parse_policy_kind(j.at("policy").get<std::string>());
  t.seed = j.at("seed").get<std::uint64_t>();
  t.control_period = j.at("control_period").get<double>();
  t.decision_period = j.at("decision_period").get<double>();
  t.desired_speed = j.at("desired_speed").get<double>();
  t.crosswalk_line_s = j.at("crosswalk_line_s").get<double>();
  t.crossing_active = j.at("crossing_active").get<bool>();
  t.termination = j.at("termination").get<std::string>();
  t.events = j.at("events").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    TraceRow row;
    row.time = r.at("time").get<double>();
    row.north = r.at("north").get<double>();
    row.east = r.at("east").get<double>();
    row.heading = r.at("heading").get<double>();
    row.ux = r.at("ux").get<double>();
    row.s = r.at("s").get<double>();
    row.e = r.at("e").get<double>();
    row.ax = r.at("ax").get<double>();
    row.steer = r.at("steer").get<double>();
    row.scale = r.at("scale").get<double>();
    row.unobservable_count = r.at("unobservable_count").get<int>();
    row.count_bin = r.at("count_bin").get<int>();
    row.detected = r.at("detected").get<bool>();
    row.p_crossing = num(r.at("p_crossing"));
    row.belief_entropy = num(r.at("belief_entropy"));
    t.rows.push_back(row);
  }
  return t;
}

/// Scene outlines in north/east for overhead plots: object,vertex,north,east.
inline void write_scene_csv(std::ostream& out, const Scene& scene) {
  out << "object,vertex,north,east\n";
  auto emit = [&](const std::string& name, const std::vector<RoadPoint>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const NorthEast ne = to_north_east(pts[i]);
      out << name << ',' << i << ',';
      detail::put(out, ne.north);
      out << ',';
      detail::put(out, ne.east);
      out << '\n';
    }
  };
  for (std::size_t k = 0; k < scene.occluders.size(); ++k) {
    const auto c = scene.occluders[k].corners();
    emit("occluder" + std::to_string(k), {c.begin(), c.end()});
  }
  const double x0 = scene.crosswalk.start_x, x1 = x0 + scene.crosswalk.width;
  emit("crosswalk", {{x0, scene.road.right_y}, {x1, scene.road.right_y}, {x1, scene.road.left_y}, {x0, scene.road.left_y}});
  emit("road_right", {{0.0, scene.road.right_y}, {scene.path_length, scene.road.right_y}});
  emit("road_left", {{0.0, scene.road.left_y}, {scene.path_length, scene.road.left_y}});
  if (scene.pedestrian.present) emit("pedestrian", {{scene.pedestrian.x, scene.pedestrian.y}});
}

/// Writes `<stem>.csv` or `<stem>.json` plus the plot companions
/// `<stem>_overhead.csv`, `<stem>_speed.csv`, `<stem>_unobservable.csv`
/// (and `<stem>_scene.csv` when a scene is given). Returns the files written.
inline std::vector<std::filesystem::path> export_trace(const Trace& trace, TraceFormat format,
                                                       const std::filesystem::path& dir, const std::string& stem,
                                                       const Scene* scene = nullptr) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;

  if (format == TraceFormat::kCsv) {
    const auto p = dir / (stem + ".csv");
    auto out = detail::open_out(p);
    write_trace_csv(out, trace);
    detail::finish(out, p);
    written.push_back(p);
  } else {
    const auto p = dir / (stem + ".json");
    auto out = detail::open_out(p);
    out << trace_to_json(trace).dump(1) << '\n';
    detail::finish(out, p);
    written.push_back(p);
  }

  {
    const auto p = dir / (stem + "_overhead.csv");
    auto out = detail::open_out(p);
    out << "time,north,east,heading\n";
    for (const auto& r : trace.rows) {
      detail::put(out, r.time), out << ',', detail::put(out, r.north), out << ',';
      detail::put(out, r.east), out << ',', detail::put(out, r.heading), out << '\n';
    }
    detail::finish(out, p);
    written.push_back(p);
  }
  {
    const auto p = dir / (stem + "_speed.csv");
    auto out = detail::open_out(p);
    out << "time,ux,scale,commanded_speed\n";
    for (const auto& r : trace.rows) {
      detail::put(out, r.time), out << ',', detail::put(out, r.ux), out << ',';
      detail::put(out, r.scale), out << ',', detail::put(out, r.scale * trace.desired_speed), out << '\n';
    }
    detail::finish(out, p);
    written.push_back(p);
  }
  {
    const auto p = dir / (stem + "_unobservable.csv");
    auto out = detail::open_out(p);
    out << "time,unobservable_count,count_bin,detected\n";
    for (const auto& r : trace.rows) {
      detail::put(out, r.time);
      out << ',' << r.unobservable_count << ',' << r.count_bin << ',' << (r.detected ? 1 : 0) << '\n';
    }
    detail::finish(out, p);
    written.push_back(p);
  }
  if (scene) {
    const auto p = dir / (stem + "_scene.csv");
    auto out = detail::open_out(p);
    write_scene_csv(out, *scene);
    detail::finish(out, p);
    written.push_back(p);
  }
  return written;
}

}  // namespace crosswalk

#endif  // CROSSWALK__TRACE_IO_HPP_
