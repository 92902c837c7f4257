#include <fstream>
#include <set>

#include "sparsecode/bench.hpp"

namespace sparsecode {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  T value{};
  read(obj, key, value, where);
  out = value;
}

AlgorithmRun parse_run(const json& obj, const std::string& where) {
  check_keys(obj, {"name", "algorithm", "lambda", "rho", "epsilon", "budgets"}, where);
  AlgorithmRun run;
  std::string algorithm;
  read(obj, "algorithm", algorithm, where);
  if (algorithm.empty()) throw ConfigError(where + ": 'algorithm' is required");
  try {
    run.algorithm = parse_algorithm(algorithm);
  } catch (const ArgumentError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  run.name = std::string(to_string(run.algorithm));
  read(obj, "name", run.name, where);
  read(obj, "lambda", run.lambda, where);
  read_optional(obj, "rho", run.rho, where);
  read_optional(obj, "epsilon", run.epsilon, where);
  read(obj, "budgets", run.budgets, where);
  return run;
}

std::vector<AlgorithmRun> parse_runs(const json& obj, const char* key, const std::string& where,
                                     std::vector<AlgorithmRun> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<AlgorithmRun> runs;
  for (std::size_t i = 0; i < it->size(); ++i)
    runs.push_back(parse_run((*it)[i], where + "." + key + "[" + std::to_string(i) + "]"));
  return runs;
}

json run_to_json(const AlgorithmRun& run) {
  json j{{"name", run.name},
         {"algorithm", std::string(to_string(run.algorithm))},
         {"lambda", run.lambda},
         {"budgets", run.budgets}};
  if (run.rho) j["rho"] = *run.rho;
  if (run.epsilon) j["epsilon"] = *run.epsilon;
  return j;
}

}  // namespace

SolverConfig AlgorithmRun::solver_config(int budget, double convergence_tol) const {
  SolverConfig c;
  switch (algorithm) {
    case Algorithm::Fista: c = SolverConfig::fista(budget); break;
    case Algorithm::Sparsa: c = SolverConfig::sparsa(budget); break;
    case Algorithm::Admm: c = SolverConfig::admm(rho.value_or(0.0), budget); break;
    case Algorithm::Blasso: c = SolverConfig::blasso(epsilon.value_or(0.0), budget); break;
  }
  c.convergence_tol = convergence_tol;
  c.trace_objective = false;
  return c;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  const std::vector<int> proximal = {1, 5, 10, 50, 100};
  c.algorithms = {
      {"FISTA", Algorithm::Fista, 0.1, std::nullopt, std::nullopt, proximal},
      {"SpaRSA", Algorithm::Sparsa, 0.1, std::nullopt, std::nullopt, proximal},
      {"ADMM30", Algorithm::Admm, 0.02, 30.0, std::nullopt, proximal},
      {"BLasso", Algorithm::Blasso, 0.0, std::nullopt, 0.25, {10, 50, 200, 500}},
  };
  c.reconstruction_extra = {{"ADMM1", Algorithm::Admm, 0.02, 1.0, std::nullopt, proximal}};
  return c;
}

fs::path ExperimentConfig::resolved_codebook_path() const {
  return codebook_path.value_or(output_dir / "codebook.pxc");
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  seeds.data = seed;
  seeds.patches = seed + 1;
  seeds.kmeans = seed + 2;
}

void ExperimentConfig::validate() const {
  if (train_count == 0 || test_count == 0) throw ConfigError("train_count and test_count must be positive");
  if (library_size == 0 || reconstruction_sample == 0)
    throw ConfigError("library_size and reconstruction_sample must be positive");
  if (codebook_size < 1) throw ConfigError("codebook.size must be positive");
  if (kmeans_iterations < 1) throw ConfigError("codebook.kmeans_iterations must be positive");
  if (!(eps_norm >= 0.0) || !(eps_zca > 0.0)) throw ConfigError("eps_norm must be >= 0 and eps_zca > 0");
  if (penalty_grid.empty()) throw ConfigError("classifier.penalty_grid must not be empty");
  for (double p : penalty_grid)
    if (!(p > 0.0)) throw ConfigError("classifier.penalty_grid entries must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("classifier.holdout_fraction must be in (0, 1)");
  if (timing_runs < 1) throw ConfigError("timing_runs must be positive");
  if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be non-negative");
  if (algorithms.empty()) throw ConfigError("algorithms must not be empty");
  std::set<std::string> names;
  auto check_run = [&](const AlgorithmRun& run) {
    if (run.name.empty() || run.name.find_first_of(",\n\"") != std::string::npos)
      throw ConfigError("algorithm name must be non-empty and free of commas, quotes and newlines");
    if (!names.insert(run.name).second) throw ConfigError("duplicate algorithm name '" + run.name + "'");
    if (run.budgets.empty()) throw ConfigError(run.name + ": budgets must not be empty");
    for (std::size_t i = 0; i < run.budgets.size(); ++i) {
      if (run.budgets[i] < 1) throw ConfigError(run.name + ": budgets must be positive");
      if (i > 0 && run.budgets[i] <= run.budgets[i - 1])
        throw ConfigError(run.name + ": budgets must be strictly increasing");
    }
    if (!(run.lambda >= 0.0)) throw ConfigError(run.name + ": lambda must be non-negative");
    try {
      run.solver_config(run.budgets.front(), convergence_tol).validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(run.name + ": " + e.what());
    }
  };
  for (const auto& run : algorithms) check_run(run);
  for (const auto& run : reconstruction_extra) check_run(run);
}

ExperimentConfig parse_config(const json& root) {
  const std::string top = "config";
  check_keys(root,
             {"dataset", "train_count", "test_count", "library_size", "reconstruction_sample", "codebook", "seeds",
              "non_negative", "classifier", "timing_runs", "one_step_closed_form", "convergence_tol", "threads",
              "algorithms", "reconstruction_extra", "output_dir"},
             top);
  ExperimentConfig c = ExperimentConfig::defaults();
  std::string path;
  if (root.contains("dataset")) {
    read(root, "dataset", path, top);
    c.dataset = path;
  }
  read(root, "train_count", c.train_count, top);
  read(root, "test_count", c.test_count, top);
  read(root, "library_size", c.library_size, top);
  read(root, "reconstruction_sample", c.reconstruction_sample, top);
  if (auto it = root.find("codebook"); it != root.end()) {
    const std::string where = top + ".codebook";
    check_keys(*it, {"size", "kmeans_iterations", "eps_norm", "eps_zca", "path"}, where);
    read(*it, "size", c.codebook_size, where);
    read(*it, "kmeans_iterations", c.kmeans_iterations, where);
    read(*it, "eps_norm", c.eps_norm, where);
    read(*it, "eps_zca", c.eps_zca, where);
    std::optional<std::string> p;
    read_optional(*it, "path", p, where);
    if (p) c.codebook_path = *p;
  }
  if (auto it = root.find("seeds"); it != root.end()) {
    const std::string where = top + ".seeds";
    check_keys(*it, {"data", "patches", "kmeans"}, where);
    read(*it, "data", c.seeds.data, where);
    read(*it, "patches", c.seeds.patches, where);
    read(*it, "kmeans", c.seeds.kmeans, where);
  }
  read(root, "non_negative", c.non_negative, top);
  if (auto it = root.find("classifier"); it != root.end()) {
    const std::string where = top + ".classifier";
    check_keys(*it, {"penalty_grid", "holdout_fraction"}, where);
    read(*it, "penalty_grid", c.penalty_grid, where);
    read(*it, "holdout_fraction", c.holdout_fraction, where);
  }
  read(root, "timing_runs", c.timing_runs, top);
  read(root, "one_step_closed_form", c.one_step_closed_form, top);
  read(root, "convergence_tol", c.convergence_tol, top);
  read(root, "threads", c.threads, top);
  c.algorithms = parse_runs(root, "algorithms", top, c.algorithms);
  c.reconstruction_extra = parse_runs(root, "reconstruction_extra", top, c.reconstruction_extra);
  if (root.contains("output_dir")) {
    read(root, "output_dir", path, top);
    c.output_dir = path;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(root);
}

json config_to_json(const ExperimentConfig& c) {
  json algorithms = json::array(), extra = json::array();
  for (const auto& run : c.algorithms) algorithms.push_back(run_to_json(run));
  for (const auto& run : c.reconstruction_extra) extra.push_back(run_to_json(run));
  json codebook{{"size", c.codebook_size},
                {"kmeans_iterations", c.kmeans_iterations},
                {"eps_norm", c.eps_norm},
                {"eps_zca", c.eps_zca}};
  if (c.codebook_path) codebook["path"] = c.codebook_path->string();
  return json{{"dataset", c.dataset.string()},
              {"train_count", c.train_count},
              {"test_count", c.test_count},
              {"library_size", c.library_size},
              {"reconstruction_sample", c.reconstruction_sample},
              {"codebook", codebook},
              {"seeds", {{"data", c.seeds.data}, {"patches", c.seeds.patches}, {"kmeans", c.seeds.kmeans}}},
              {"non_negative", c.non_negative},
              {"classifier", {{"penalty_grid", c.penalty_grid}, {"holdout_fraction", c.holdout_fraction}}},
              {"timing_runs", c.timing_runs},
              {"one_step_closed_form", c.one_step_closed_form},
              {"convergence_tol", c.convergence_tol},
              {"threads", c.threads},
              {"algorithms", algorithms},
              {"reconstruction_extra", extra},
              {"output_dir", c.output_dir.string()}};
}

}  // namespace sparsecode
