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

// crosswalk_sim: solve | run | batch | grid-dump

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crosswalk/harness.hpp"
#include "crosswalk/trace_io.hpp"

namespace fs = std::filesystem;
using namespace crosswalk;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string format = "csv";
  std::optional<long long> seed;
  int verbosity = 0;
};

void add_common(CLI::App* app, Common& c, bool with_format) {
  app->add_option("-c,--config", c.config, "config file or directory")->required();
  app->add_option("-o,--out", c.out, "output directory")->capture_default_str();
  if (with_format) {
    app->add_option("-f,--format", c.format, "trace format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app->add_option("-s,--seed", c.seed, "override the scenario seed");
  }
  app->add_flag("-v,--verbose", c.verbosity, "more output (repeatable)");
}

double max_of(const Trace& t, double TraceRow::*field) {
  double m = 0.0;
  for (const auto& r : t.rows) m = std::max(m, r.*field);
  return m;
}

void summarize(const Trace& t) {
  const TraceRow last = t.rows.empty() ? TraceRow{} : t.rows.back();
  std::printf("%s: policy=%s rows=%zu end=%s t=%.2f s=%.2f ux=%.2f max_ux=%.2f line_s=%.2f\n", t.scenario.c_str(),
              std::string(to_string(t.policy)).c_str(), t.rows.size(), t.termination.c_str(), last.time, last.s,
              last.ux, max_of(t, &TraceRow::ux), t.crosswalk_line_s);
  for (const auto& e : t.events) std::printf("  event: %s\n", e.c_str());
}

int run_one(const fs::path& file, const Common& c, const SolvedModel* solved = nullptr) {
  ScenarioConfig cfg = load_scenario(file);
  if (c.seed) cfg.seed = static_cast<std::uint64_t>(*c.seed);
  Trace trace;
  int rc = 0;
  try {
    trace = run_scenario(cfg, solved);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "%s: %s (partial trace kept)\n", file.string().c_str(), e.what());
    trace = e.partial_trace();
    rc = 1;
  }
  const auto files = export_trace(trace, parse_trace_format(c.format), c.out, cfg.name, &cfg.scene);
  if (c.verbosity > 0) summarize(trace);
  if (c.verbosity > 1) {
    for (const auto& f : files) std::printf("  wrote %s\n", f.string().c_str());
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occluded-crosswalk speed planner: QMDP solve, closed-loop runs, grid dumps"};
  app.require_subcommand(1);

  Common solve_opts;
  auto* solve = app.add_subcommand("solve", "build the crosswalk model, run value iteration, write the policy file");
  add_common(solve, solve_opts, false);
  double tolerance = 1e-6;
  solve->add_option("--tolerance", tolerance, "value iteration stopping tolerance")->capture_default_str();

  Common run_opts;
  auto* run = app.add_subcommand("run", "run one scenario file and write its trace");
  add_common(run, run_opts, true);

  Common batch_opts;
  int jobs = 1;
  auto* batch = app.add_subcommand("batch", "run every *.cfg scenario in a directory");
  add_common(batch, batch_opts, true);
  batch->add_option("-j,--jobs", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber)->capture_default_str();

  Common grid_opts;
  std::vector<double> pose{0.0, 0.0, 0.0};
  auto* grid = app.add_subcommand("grid-dump", "rasterise a scene from one ego pose");
  add_common(grid, grid_opts, false);
  grid->add_option("--pose", pose, "ego pose: x y heading_deg (road frame)")->expected(3);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      // a scenario file gets its occlusion zone from its scene; anything else is read as a model file
      const auto kv = KeyValueConfig::from_file(solve_opts.config);
      ModelParams params;
      std::string name = fs::path(solve_opts.config).stem().string();
      if (kv.has("policy")) {
        const auto scenario = load_scenario(solve_opts.config);
        params = effective_model_params(scenario);
        name = scenario.name;
      } else {
        params = model_params_from_config(kv);
      }
      const auto t0 = std::chrono::steady_clock::now();
      const SolvedModel solved = solve_model(params, tolerance);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      fs::create_directories(solve_opts.out);
      const fs::path out = fs::path(solve_opts.out) / (name + ".policy");
      save_policy(out, solved.policy);
      std::printf("solved %d states x %d actions in %d sweeps (residual %.3g, %.2f s), occlusion zone bins [%d, %d] -> %s\n",
                  solved.model.num_states(), solved.model.num_actions(), solved.iterations, solved.residual, secs,
                  params.occlusion_zone_first_bin, params.occlusion_zone_last_bin, out.string().c_str());
      return 0;
    }
    if (*run) {
      return run_one(run_opts.config, run_opts);
    }
    if (*batch) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(batch_opts.config)) {
        if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw std::runtime_error("no *.cfg scenarios in '" + batch_opts.config + "'");
      int failures = 0;
      for (std::size_t i = 0; i < files.size(); i += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<int>> running;
        for (std::size_t k = i; k < std::min(files.size(), i + static_cast<std::size_t>(jobs)); ++k) {
          running.push_back(std::async(std::launch::async, [&, k] { return run_one(files[k], batch_opts); }));
        }
        for (auto& f : running) {
          try {
            failures += f.get();
          } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            ++failures;
          }
        }
      }
      std::printf("%zu scenarios, %d failed\n", files.size(), failures);
      return failures == 0 ? 0 : 1;
    }
    if (*grid) {
      const Scene scene = scene_from_config(KeyValueConfig::from_file(grid_opts.config));
      const EgoPose ego{pose[0], pose[1], pose[2] * kPi / 180.0};
      const OccupancyGrid g = build_grid(scene, ego);
      const SensorObservation obs = sense(scene, ego, g);
      fs::create_directories(grid_opts.out);
      const fs::path out = fs::path(grid_opts.out) / (fs::path(grid_opts.config).stem().string() + "_grid.csv");
      std::ofstream f(out);
      if (!f) throw std::runtime_error("cannot write '" + out.string() + "'");
      write_grid_csv(f, g);
      std::printf("unobservable=%d bin=%d detected=%d -> %s\n", obs.unobservable_count, obs.count_bin,
                  obs.pedestrian_detected ? 1 : 0, out.string().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
