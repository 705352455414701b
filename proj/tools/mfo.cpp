// Copyright 2026 The MFO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mfo: solve, bridge, quantize and report for mean-field optimization
// experiments. Batch repeats use MFO_THREADS worker threads.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfo/experiment.hpp"
#include "mfo/quantize.hpp"
#include "mfo/transport.hpp"

namespace {

using nlohmann::json;

int Solve(const std::string& config_path, const std::optional<std::uint64_t>& seed,
          const std::optional<int>& repeats, const std::string& problem,
          const std::string& out) {
  mfo::ExperimentConfig config = mfo::LoadExperimentConfig(config_path);
  if (seed) {
    config.seed = *seed;
    config.solver.seed = *seed;
  }
  if (repeats) config.repeats = *repeats;
  if (!problem.empty() && problem != config.problem) {
    config.problem = problem;
    config.params = json::object();
  }
  config.Validate();
  const int status = mfo::RunExperiment(config, out, mfo::ThreadCountFromEnv());
  const json summary = mfo::SummarizeRun(out);
  std::cout << summary.dump(2) << "\n";
  if (status != 0) std::cerr << "mfo: solve aborted: " << summary.value("error", std::string("oracle failure")) << "\n";
  return status;
}

int Bridge(const std::string& mu0, const std::string& m1, const std::string& problem,
           const std::string& config_path, const std::string& out) {
  json params;
  std::string name = problem;
  if (!config_path.empty()) {
    const mfo::ExperimentConfig config = mfo::LoadExperimentConfig(config_path);
    if (name.empty()) name = config.problem;
    if (name == config.problem) params = config.params;
  }
  if (name.empty()) {
    // A final.json from solve records the problem it was solved for.
    std::ifstream in(mu0);
    const json j = json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.contains("config")) name = j["config"]["problem"].value("name", "");
  }
  if (name.empty()) throw mfo::MfoError("bridge: --problem or --config is required");
  const mfo::BridgeReport report = mfo::RunBridge(mu0, m1, name, params, out);
  json brief = report.json;
  brief.erase("coupling");
  std::cout << brief.dump(2) << "\n";
  return 0;
}

int Quantize(const std::string& dist_spec, std::size_t n, const std::string& method,
             std::uint64_t seed, std::size_t d1_sample, const std::string& out) {
  const mfo::SourceDistribution dist = mfo::SourceDistribution::Parse(dist_spec);
  json j;
  j["dist"] = dist.ToString();
  j["method"] = method;
  j["N"] = n;
  mfo::EmpiricalMeasure measure;
  if (method == "grid") {
    const mfo::GridQuantization grid = mfo::QuantizeGrid(dist, n);
    measure = grid.measure;
    j["truncated_mass"] = grid.truncated_mass;
    j["support_max"] = grid.support_max;
  } else {
    measure = mfo::QuantizeSample(dist, n, seed);
    j["seed"] = seed;
  }
  j["measure"] = mfo::ToJson(measure);
  if (d1_sample > 0) j["d1"] = mfo::ToJson(mfo::EstimateD1(dist, measure, d1_sample, seed + 1));
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    const std::filesystem::path parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream file(out, std::ios::binary);
    if (!file) throw mfo::MfoError("cannot write '" + out + "'");
    // The measure alone, so the file can feed `bridge --m1` directly.
    file << j.at("measure").dump(2) << "\n";
    j.erase("measure");
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field optimization experiments"};
  app.require_subcommand(1);

  std::string config_path, out = "out", problem;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  auto* solve = app.add_subcommand("solve", "Run a configured experiment");
  solve->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  solve->add_option("--seed", seed, "Override the config seed");
  solve->add_option("--repeats", repeats, "Override the batch repeat count")->check(CLI::PositiveNumber);
  solve->add_option("--problem", problem, "Override the problem name");
  solve->add_option("--out", out, "Output directory");

  std::string mu0_file, m1_file;
  auto* bridge = app.add_subcommand("bridge", "Carry a solution over to a new marginal");
  bridge->add_option("--mu0", mu0_file, "final.json or measure JSON on Z")->required()->check(CLI::ExistingFile);
  bridge->add_option("--m1", m1_file, "Measure JSON on X")->required()->check(CLI::ExistingFile);
  bridge->add_option("--problem", problem, "Problem name");
  bridge->add_option("--config", config_path, "Config supplying problem parameters");
  bridge->add_option("--out", out, "Output directory");

  std::string dist_spec, method = "sample", quant_out;
  std::size_t n = 0, d1_sample = 0;
  std::uint64_t quant_seed = 1;
  auto* quantize = app.add_subcommand("quantize", "Quantize a marginal distribution");
  quantize->add_option("--dist", dist_spec, "uniform:a:b, exponential:rate or file:<path>")->required();
  quantize->add_option("--n", n, "Number of atoms")->required()->check(CLI::PositiveNumber);
  quantize->add_option("--method", method, "sample or grid")->check(CLI::IsMember({"sample", "grid"}));
  quantize->add_option("--seed", quant_seed, "Sampling seed");
  quantize->add_option("--d1-sample", d1_sample, "Also estimate d1 with this sample size");
  quantize->add_option("--out", quant_out, "Write the measure JSON here");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Summarize a finished run directory");
  report->add_option("dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return Solve(config_path, seed, repeats, problem, out);
    if (*bridge) return Bridge(mu0_file, m1_file, problem, config_path, out);
    if (*quantize) return Quantize(dist_spec, n, method, quant_seed, d1_sample, quant_out);
    if (*report) {
      std::cout << mfo::SummarizeRun(run_dir).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mfo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
