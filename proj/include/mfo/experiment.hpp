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

// Config-driven experiment runner behind the `mfo` command line tool.
//
// Config (JSON):
//   {
//     "schema_version": 1,
//     "problem":  {"name": "resource" | "congestion" | "traffic", "params": {...}},
//     "marginal": {"dist": "exponential:1", "method": "sample" | "grid", "N": 50},
//     "solver":   {"method": "fw" | "sfw", "iterations": 100, ...},
//     "seed": 1,
//     "repeats": 1
//   }
// Traffic takes its marginal from the OD demands; "params" names a builtin
// network ("network": "pigou" | "grid") or CSV files ("edges", "od").

#ifndef MFO_EXPERIMENT_HPP_
#define MFO_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfo/measures.hpp"
#include "mfo/problem.hpp"
#include "mfo/quantize.hpp"
#include "mfo/solvers.hpp"

namespace mfo {

inline constexpr int kSchemaVersion = 1;

struct MarginalSpec {
  std::string dist;            // SourceDistribution spec; empty = problem default
  std::string method = "sample";
  std::size_t n = 50;
};

struct ExperimentConfig {
  std::string problem = "resource";
  nlohmann::json params = nlohmann::json::object();
  MarginalSpec marginal;
  std::string method = "fw";   // fw | sfw
  SolverConfig solver;
  std::uint64_t seed = 1;
  int repeats = 1;

  void Validate() const;
};

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
/// Parse errors carry the line and column of the offending character.
ExperimentConfig LoadExperimentConfig(const std::string& path);
nlohmann::json ToJson(const ExperimentConfig& config);

std::unique_ptr<Problem> MakeProblem(const std::string& name, const nlohmann::json& params);

/// Marginal of one repeat: the OD demands for traffic, otherwise a sample or
/// grid quantization of the configured distribution.
EmpiricalMeasure MakeMarginal(const ExperimentConfig& config, const Problem& problem,
                              std::uint64_t seed);

/// Worker threads for batch repeats, from MFO_THREADS (default 1).
int ThreadCountFromEnv();

struct RepeatResult {
  std::uint64_t seed = 0;
  EmpiricalMeasure marginal;
  SolveReport report;
};

RepeatResult RunOnce(const ExperimentConfig& config, const Problem& problem,
                     std::uint64_t seed);

/// Runs all repeats and writes history.csv, final.json and the per-problem
/// dumps into out_dir (repeat 0), plus batch.csv and batch_aggregate.csv when
/// repeats > 1. Returns 0 on success, 2 when a solve aborted.
int RunExperiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  int threads);

struct BridgeReport {
  EmpiricalMeasure measure;
  double d1 = 0.0;
  double eps0 = 0.0;
  bool eps0_from_file = false;
  double eta = 0.0;
  nlohmann::json json;
};

/// Bridges mu0 (a final.json or a measure JSON) onto the marginal m1 and
/// writes bridged.json and bridge_report.json into out_dir.
BridgeReport RunBridge(const std::string& mu0_file, const std::string& m1_file,
                       const std::string& problem_name, const nlohmann::json& params,
                       const std::filesystem::path& out_dir);

/// Summary of a finished run directory.
nlohmann::json SummarizeRun(const std::filesystem::path& dir);

void WriteHistoryCsv(std::ostream& out, const std::vector<IterationRecord>& history);

}  // namespace mfo

#endif  // MFO_EXPERIMENT_HPP_
