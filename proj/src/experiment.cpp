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

#include "mfo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "mfo/examples/congestion.hpp"
#include "mfo/examples/resource.hpp"
#include "mfo/examples/traffic.hpp"
#include "mfo/rng.hpp"
#include "mfo/transport.hpp"

namespace mfo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs get(value) and prefixes any failure with the field path.
template <typename T>
T Field(const json& value, const std::string& path) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw MfoError("config field '" + path + "': " + e.what());
  }
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MfoError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out = OpenOut(path);
  out << j.dump(2) << "\n";
}

json ConstantsJson(const ProblemConstants& c) {
  return {{"L", c.lipschitz_grad},
          {"M", c.g_bound},
          {"D", c.g_diameter_sq},
          {"C", c.grad_bound},
          {"L_g", c.lipschitz_set},
          {"stability_modulus", c.StabilityModulus()}};
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MfoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw MfoError(path + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (problem != "resource" && problem != "congestion" && problem != "traffic")
    throw MfoError("config field 'problem.name': unknown problem '" + problem + "'");
  if (marginal.method != "sample" && marginal.method != "grid")
    throw MfoError("config field 'marginal.method': expected sample or grid");
  if (marginal.n < 1) throw MfoError("config field 'marginal.N': must be >= 1");
  if (method != "fw" && method != "sfw") throw MfoError("config field 'solver.method': expected fw or sfw");
  if (repeats < 1) throw MfoError("config field 'repeats': must be >= 1");
  solver.Validate();
}

ExperimentConfig ExperimentConfigFromJson(const json& j) {
  if (!j.is_object()) throw MfoError("config must be a JSON object");
  ExperimentConfig c;
  bool have_version = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") {
      const int version = Field<int>(value, key);
      if (version != kSchemaVersion)
        throw MfoError("config field 'schema_version': expected " + std::to_string(kSchemaVersion) +
                       ", got " + std::to_string(version));
      have_version = true;
    } else if (key == "problem") {
      if (!value.is_object()) throw MfoError("config field 'problem': must be an object");
      for (const auto& [pk, pv] : value.items()) {
        if (pk == "name") c.problem = Field<std::string>(pv, "problem.name");
        else if (pk == "params") c.params = pv;
        else throw MfoError("config field 'problem." + pk + "': unknown field");
      }
    } else if (key == "marginal") {
      if (!value.is_object()) throw MfoError("config field 'marginal': must be an object");
      for (const auto& [mk, mv] : value.items()) {
        if (mk == "dist") c.marginal.dist = Field<std::string>(mv, "marginal.dist");
        else if (mk == "method") c.marginal.method = Field<std::string>(mv, "marginal.method");
        else if (mk == "N") c.marginal.n = Field<std::size_t>(mv, "marginal.N");
        else throw MfoError("config field 'marginal." + mk + "': unknown field");
      }
    } else if (key == "solver") {
      if (value.contains("method")) c.method = Field<std::string>(value.at("method"), "solver.method");
      try {
        c.solver = SolverConfigFromJson(value);
      } catch (const json::exception& e) {
        throw MfoError(std::string("config field 'solver': ") + e.what());
      }
    } else if (key == "seed") {
      c.seed = Field<std::uint64_t>(value, key);
    } else if (key == "repeats") {
      c.repeats = Field<int>(value, key);
    } else {
      throw MfoError("config field '" + key + "': unknown field");
    }
  }
  if (!have_version) throw MfoError("config field 'schema_version': missing");
  c.solver.seed = c.seed;
  c.Validate();
  // Surface parameter errors before any work starts.
  MakeProblem(c.problem, c.params);
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MfoError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw MfoError(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
  }
  try {
    return ExperimentConfigFromJson(j);
  } catch (const MfoError& e) {
    throw MfoError(path + ": " + e.what());
  }
}

json ToJson(const ExperimentConfig& c) {
  json solver = ToJson(c.solver);
  solver["method"] = c.method;
  json marginal = {{"method", c.marginal.method}, {"N", c.marginal.n}};
  if (!c.marginal.dist.empty()) marginal["dist"] = c.marginal.dist;
  return {{"schema_version", kSchemaVersion},
          {"problem", {{"name", c.problem}, {"params", c.params}}},
          {"marginal", marginal},
          {"solver", solver},
          {"seed", c.seed},
          {"repeats", c.repeats}};
}

std::unique_ptr<Problem> MakeProblem(const std::string& name, const json& params) {
  const json p = params.is_null() ? json::object() : params;
  try {
    if (name == "resource") return std::make_unique<ResourceProblem>(ResourceInstanceFromJson(p));
    if (name == "congestion") return std::make_unique<CongestionProblem>(CongestionInstanceFromJson(p));
    if (name == "traffic") {
      std::string network = "pigou", edges, od;
      int max_hops = -1;
      if (!p.is_object()) throw MfoError("traffic parameters must be an object");
      for (const auto& [key, value] : p.items()) {
        if (key == "network") network = value.get<std::string>();
        else if (key == "edges") edges = value.get<std::string>();
        else if (key == "od") od = value.get<std::string>();
        else if (key == "max_hops") max_hops = value.get<int>();
        else throw MfoError("traffic parameters: unknown field '" + key + "'");
      }
      TrafficNetwork net;
      if (!edges.empty() || !od.empty()) {
        if (edges.empty() || od.empty()) throw MfoError("traffic parameters: 'edges' and 'od' go together");
        net = LoadNetwork(edges, od, max_hops > 0 ? max_hops : 6);
      } else if (network == "pigou") {
        net = PigouNetwork();
      } else if (network == "grid") {
        net = GridNetwork();
      } else {
        throw MfoError("traffic parameters: unknown network '" + network + "'");
      }
      if (max_hops > 0) net.max_hops = max_hops;
      return std::make_unique<TrafficProblem>(std::move(net));
    }
  } catch (const json::exception& e) {
    throw MfoError("config field 'problem.params': " + std::string(e.what()));
  }
  throw MfoError("unknown problem '" + name + "'");
}

EmpiricalMeasure MakeMarginal(const ExperimentConfig& config, const Problem& problem,
                              std::uint64_t seed) {
  if (const auto* traffic = dynamic_cast<const TrafficProblem*>(&problem)) return traffic->DemandMeasure();
  std::string spec = config.marginal.dist;
  if (spec.empty()) {
    std::ostringstream os;
    os << std::setprecision(17);
    if (const auto* res = dynamic_cast<const ResourceProblem*>(&problem))
      os << "exponential:" << res->instance().stock_rate;
    else if (const auto* con = dynamic_cast<const CongestionProblem*>(&problem))
      os << "uniform:0:" << con->instance().start_max;
    spec = os.str();
  }
  const SourceDistribution dist = SourceDistribution::Parse(spec);
  if (config.marginal.method == "grid") return QuantizeGrid(dist, config.marginal.n).measure;
  return QuantizeSample(dist, config.marginal.n, seed);
}

int ThreadCountFromEnv() {
  const char* raw = std::getenv("MFO_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (*end != '\0' || n < 1) throw MfoError("MFO_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 256));
}

RepeatResult RunOnce(const ExperimentConfig& config, const Problem& problem,
                     std::uint64_t seed) {
  RepeatResult r;
  r.seed = seed;
  // Marginal draws use a stream separate from the solver's.
  r.marginal = MakeMarginal(config, problem, SplitMix64(seed ^ 0x6d617267696e616cULL));
  SolverConfig solver = config.solver;
  solver.seed = seed;
  r.report = config.method == "sfw" ? SfwSolve(problem, r.marginal, solver)
                                    : FwSolve(problem, r.marginal, solver);
  return r;
}

void WriteHistoryCsv(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << std::setprecision(17);
  out << "k,objective,gap,lambda_norm,time_ms\n";
  for (const IterationRecord& r : history)
    out << r.k << "," << r.objective << "," << r.gap << "," << r.lambda_norm << "," << r.time_ms << "\n";
}

namespace {

void WriteResourceDumps(const ResourceProblem& problem, const SolveReport& report,
                        const fs::path& dir) {
  std::ofstream prof = OpenOut(dir / "profiles.csv");
  prof << "atom,x,w,t,q,stock\n";
  const EmpiricalMeasure& mu = report.measure;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Vector stock = problem.StockPath(mu[i].x[0], mu[i].y);
    for (Eigen::Index t = 0; t < mu[i].y.size(); ++t)
      prof << i << "," << mu[i].x[0] << "," << mu[i].w << "," << t << "," << mu[i].y[t] << "," << stock[t] << "\n";
  }
  const Aggregate beta = AggregateOf(problem, mu);
  std::ofstream agg = OpenOut(dir / "aggregate.csv");
  agg << "t,Q\n";
  for (int t = 0; t < problem.instance().steps; ++t) agg << t << "," << beta[1 + t] << "\n";
}

void WriteCongestionDumps(const CongestionProblem& problem, const SolveReport& report,
                          const fs::path& dir) {
  std::ofstream out = OpenOut(dir / "trajectories.csv");
  out << "atom,x,w,t,gamma\n";
  const EmpiricalMeasure& mu = report.measure;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (Eigen::Index t = 0; t < mu[i].y.size(); ++t)
      out << i << "," << mu[i].x[0] << "," << mu[i].w << "," << t << "," << mu[i].y[t] << "\n";
  std::ofstream arr = OpenOut(dir / "arrivals.csv");
  arr << "atom,x,w,arrival_step\n";
  for (std::size_t i = 0; i < mu.size(); ++i)
    arr << i << "," << mu[i].x[0] << "," << mu[i].w << "," << problem.ArrivalStep(mu[i].y) << "\n";
}

void WriteTrafficDumps(const TrafficProblem& problem, const SolveReport& report,
                       const fs::path& dir) {
  const Aggregate flow = AggregateOf(problem, report.measure);
  const Vector latency = problem.PotentialGrad(flow.values());
  std::ofstream edges = OpenOut(dir / "flows.csv");
  edges << "edge,from,to,flow,latency\n";
  for (std::size_t e = 0; e < problem.num_edges(); ++e) {
    const TrafficEdge& edge = problem.network().edges[e];
    edges << e << "," << edge.from << "," << edge.to << "," << flow[e] << "," << latency[e] << "\n";
  }
  std::ofstream paths = OpenOut(dir / "paths.csv");
  paths << "origin,destination,path,mass,cost\n";
  for (std::size_t od = 0; od < problem.network().od_pairs.size(); ++od) {
    const OdPair& pair = problem.network().od_pairs[od];
    for (const Path& p : problem.paths(od)) {
      const Vector y = problem.Indicator(p);
      double mass = 0.0;
      for (const Atom& a : report.measure.atoms())
        if (std::lround(a.x[0]) == pair.origin && std::lround(a.x[1]) == pair.destination && NearlyEqual(a.y, y))
          mass += a.w;
      std::string label;
      for (std::size_t k = 0; k < p.size(); ++k) label += (k ? "-" : "") + std::to_string(p[k]);
      paths << pair.origin << "," << pair.destination << "," << label << "," << mass << "," << y.dot(latency) << "\n";
    }
  }
}

json FinalJson(const ExperimentConfig& config, const Problem& problem, const RepeatResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["problem"] = problem.name();
  j["config"] = ToJson(config);
  j["seed"] = r.seed;
  j["marginal"] = ToJson(r.marginal);
  j["measure"] = ToJson(r.report.measure);
  if (r.report.error.empty()) j["certificate"] = ToJson(r.report.certificate);
  j["constants"] = ConstantsJson(problem.constants());
  j["iterations"] = r.report.history.size();
  j["stopped_early"] = r.report.stopped_early;
  j["outside_guaranteed_regime"] = r.report.outside_guaranteed_regime;
  if (!r.report.error.empty()) j["error"] = r.report.error;
  return j;
}

}  // namespace

int RunExperiment(const ExperimentConfig& config, const fs::path& out_dir, int threads) {
  config.Validate();
  const std::unique_ptr<Problem> problem = MakeProblem(config.problem, config.params);
  fs::create_directories(out_dir);

  std::vector<RepeatResult> results(config.repeats);
  std::vector<std::string> failures(config.repeats);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < config.repeats; r = next++) {
      try {
        results[r] = RunOnce(config, *problem, config.seed + static_cast<std::uint64_t>(r));
      } catch (const std::exception& e) {
        failures[r] = e.what();
      }
    }
  };
  const int pool = std::max(1, std::min(threads, config.repeats));
  std::vector<std::thread> workers;
  for (int t = 1; t < pool; ++t) workers.emplace_back(worker);
  worker();
  for (std::thread& t : workers) t.join();
  for (int r = 0; r < config.repeats; ++r)
    if (!failures[r].empty()) throw MfoError("repeat " + std::to_string(r) + ": " + failures[r]);

  const RepeatResult& first = results[0];
  {
    std::ofstream hist = OpenOut(out_dir / "history.csv");
    WriteHistoryCsv(hist, first.report.history);
  }
  WriteJson(out_dir / "final.json", FinalJson(config, *problem, first));
  if (const auto* res = dynamic_cast<const ResourceProblem*>(problem.get())) WriteResourceDumps(*res, first.report, out_dir);
  if (const auto* con = dynamic_cast<const CongestionProblem*>(problem.get())) WriteCongestionDumps(*con, first.report, out_dir);
  if (const auto* tra = dynamic_cast<const TrafficProblem*>(problem.get())) WriteTrafficDumps(*tra, first.report, out_dir);

  if (config.repeats > 1) {
    std::ofstream batch = OpenOut(out_dir / "batch.csv");
    batch << "repeat,seed,objective,gap\n";
    std::vector<Vector> aggregates;
    for (int r = 0; r < config.repeats; ++r) {
      const SolveReport& rep = results[r].report;
      batch << r << "," << results[r].seed << "," << rep.certificate.primal_value << "," << rep.certificate.gap << "\n";
      aggregates.push_back(AggregateOf(*problem, rep.measure).values());
    }
    const Eigen::Index dim = aggregates[0].size();
    Vector mean = Vector::Zero(dim), sq = Vector::Zero(dim);
    for (const Vector& a : aggregates) mean += a / config.repeats;
    for (const Vector& a : aggregates) sq += (a - mean).cwiseAbs2();
    const Vector sd = (sq / (config.repeats - 1)).cwiseSqrt();
    std::ofstream agg = OpenOut(out_dir / "batch_aggregate.csv");
    agg << "index,mean,std\n";
    for (Eigen::Index i = 0; i < dim; ++i) agg << i << "," << mean[i] << "," << sd[i] << "\n";
    if (dynamic_cast<const ResourceProblem*>(problem.get()) != nullptr) {
      std::ofstream q = OpenOut(out_dir / "batch_Q.csv");
      q << "t,mean,std\n";
      for (Eigen::Index t = 1; t < dim; ++t) q << t - 1 << "," << mean[t] << "," << sd[t] << "\n";
    }
  }

  for (int r = 0; r < config.repeats; ++r)
    if (!results[r].report.error.empty()) return 2;
  return 0;
}

BridgeReport RunBridge(const std::string& mu0_file, const std::string& m1_file,
                       const std::string& problem_name, const json& params,
                       const fs::path& out_dir) {
  const json mu0_json = ReadJsonFile(mu0_file);
  EmpiricalMeasure mu0;
  std::optional<double> stored_gap;
  json problem_params = params;
  if (mu0_json.contains("measure")) {
    mu0 = MeasureFromJson(mu0_json.at("measure"));
    if (mu0_json.contains("certificate")) stored_gap = mu0_json.at("certificate").at("gap").get<double>();
    if ((problem_params.is_null() || problem_params.empty()) && mu0_json.contains("config")) {
      const json& cfg = mu0_json.at("config").at("problem");
      if (cfg.at("name").get<std::string>() != problem_name)
        throw MfoError("bridge: '" + mu0_file + "' was solved for problem '" +
                       cfg.at("name").get<std::string>() + "'");
      problem_params = cfg.at("params");
    }
  } else {
    mu0 = MeasureFromJson(mu0_json);
  }
  if (mu0.space() != Space::kZ) throw MfoError("bridge: mu0 must be a measure on Z");

  // Accepts a bare measure or the output of the quantize verb.
  const json m1_json = ReadJsonFile(m1_file);
  EmpiricalMeasure m1 = MeasureFromJson(m1_json.contains("measure") ? m1_json.at("measure") : m1_json);
  if (m1.space() == Space::kZ) m1 = FirstMarginal(m1);
  if (m1.space() != Space::kX) throw MfoError("bridge: m1 must be a measure on X");

  const std::unique_ptr<Problem> problem = MakeProblem(problem_name, problem_params);
  for (std::size_t i = 0; i < mu0.size(); ++i)
    if (!problem->feasible(mu0[i].x, mu0[i].y))
      throw MfoError("bridge: atom " + std::to_string(i) + " of mu0 is infeasible for problem '" + problem_name + "'");

  const BridgeResult bridged = Bridge(mu0, m1, *problem);
  const ProblemConstants constants = problem->constants();

  BridgeReport out;
  out.measure = bridged.measure;
  out.d1 = bridged.d1;
  out.eps0_from_file = stored_gap.has_value();
  out.eps0 = stored_gap ? *stored_gap : FwGap(*problem, mu0).gap;
  out.eta = out.eps0 + 2.0 * constants.StabilityModulus() * out.d1;
  const DualCertificate after = FwGap(*problem, out.measure);
  out.json = {{"d1", out.d1},
              {"eps0", out.eps0},
              {"eps0_source", out.eps0_from_file ? "certificate" : "recomputed"},
              {"eta", out.eta},
              {"constants", ConstantsJson(constants)},
              {"objective_mu0", problem->f_value(AggregateOf(*problem, mu0))},
              {"objective_bridged", after.primal_value},
              {"gap_bridged", after.gap},
              {"coupling", ToJson(bridged.coupling)}};

  fs::create_directories(out_dir);
  WriteJson(out_dir / "bridged.json", ToJson(out.measure));
  WriteJson(out_dir / "bridge_report.json", out.json);
  return out;
}

json SummarizeRun(const fs::path& dir) {
  const json final_json = ReadJsonFile((dir / "final.json").string());
  std::ifstream hist(dir / "history.csv");
  if (!hist) throw MfoError("cannot open '" + (dir / "history.csv").string() + "'");
  std::string line;
  std::getline(hist, line);
  double min_gap = std::numeric_limits<double>::infinity();
  int rows = 0;
  while (std::getline(hist, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 3 && std::getline(ss, cell, ','); ++c)
      if (c == 2) min_gap = std::min(min_gap, std::stod(cell));
    ++rows;
  }
  json s;
  s["problem"] = final_json.at("problem");
  s["seed"] = final_json.at("seed");
  s["iterations"] = rows;
  s["method"] = final_json.at("config").at("solver").at("method");
  s["support_size"] = final_json.at("measure").at("atoms").size();
  if (final_json.contains("certificate")) {
    s["objective"] = final_json.at("certificate").at("primal_value");
    s["final_gap"] = final_json.at("certificate").at("gap");
    s["dual_value"] = final_json.at("certificate").at("dual_value");
  }
  if (rows > 0) s["min_history_gap"] = min_gap;
  const json& c = final_json.at("constants");
  s["constants"] = c;
  if (rows > 0) {
    const double ld = c.at("L").get<double>() * c.at("D").get<double>();
    if (s["method"] == "fw") s["rate_bound"] = 2.0 * ld / rows;
    else s["rate_bound"] = 4.0 * ld / rows;
  }
  s["stopped_early"] = final_json.at("stopped_early");
  s["outside_guaranteed_regime"] = final_json.at("outside_guaranteed_regime");
  if (final_json.contains("error")) s["error"] = final_json.at("error");
  return s;
}

}  // namespace mfo
