#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsecode/cifar.hpp"
#include "sparsecode/pipeline.hpp"
#include "sparsecode/solvers.hpp"

namespace sparsecode {

/// One algorithm entry of an experiment: solver parameters and the iteration budgets to sweep.
struct AlgorithmRun {
  std::string name;  // label in the CSV, e.g. "ADMM30"
  Algorithm algorithm = Algorithm::Fista;
  double lambda = 0.0;
  std::optional<double> rho;
  std::optional<double> epsilon;
  std::vector<int> budgets;  // non-empty, strictly increasing, >= 1

  SolverConfig solver_config(int budget, double convergence_tol) const;
};

struct Seeds {
  std::uint64_t data = 1;     // train/test subsampling
  std::uint64_t patches = 2;  // library and reconstruction patch sampling
  std::uint64_t kmeans = 3;
};

struct ExperimentConfig {
  std::filesystem::path dataset = "data/cifar-10-batches-bin";
  std::size_t train_count = 5000;
  std::size_t test_count = 2000;
  std::size_t library_size = 100000;
  std::size_t reconstruction_sample = 10000;

  Index codebook_size = 200;
  int kmeans_iterations = 10;
  double eps_norm = kDefaultEpsNorm;
  double eps_zca = kDefaultEpsZca;
  std::optional<std::filesystem::path> codebook_path;  // default: <output_dir>/codebook.pxc

  Seeds seeds;
  bool non_negative = true;
  std::vector<double> penalty_grid = default_penalty_grid();
  double holdout_fraction = 0.2;
  int timing_runs = 1;
  bool one_step_closed_form = true;  // budget-1 cells use the onestep encoders
  double convergence_tol = 1e-6;
  unsigned threads = 0;

  std::vector<AlgorithmRun> algorithms;       // experiments 1 and 2
  std::vector<AlgorithmRun> reconstruction_extra;  // experiment 2 only

  std::filesystem::path output_dir = "results";

  /// Table defaults: FISTA/SpaRSA lambda 0.1, ADMM lambda 0.02 rho 30, BLasso epsilon 0.25;
  /// ADMM rho 1 as the extra reconstruction run.
  static ExperimentConfig defaults();
  std::filesystem::path resolved_codebook_path() const;
  /// Throws ConfigError.
  void validate() const;
  /// Overrides all three seeds with seed, seed + 1, seed + 2.
  void set_seed(std::uint64_t seed);
};

/// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& json);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ResultRow {
  std::string algorithm;
  int budget = 0;
  double encode_seconds = 0.0;
  double setup_seconds = 0.0;
  std::string metric_name;  // "accuracy" or "mean_reconstruction_error"
  double metric = 0.0;
  std::optional<double> lambda;
  std::optional<double> rho;
  std::optional<double> epsilon;
  bool diverged = false;
};

/// Header line then one row per entry; %.17g numbers, empty cells for missing parameters.
std::string format_csv(const std::vector<ResultRow>& rows, const std::string& metric_name);
nlohmann::json rows_to_json(const std::vector<ResultRow>& rows);

struct TrainedCodebook {
  WhiteningTransform whitening;
  Dictionary dictionary;
  std::filesystem::path path;
  std::uint64_t checksum = 0;
  bool trained = false;  // false when loaded from an existing file
};

/// Samples library_size patches from `train`, normalizes, fits ZCA, runs K-means,
/// and writes the codebook file.
TrainedCodebook train_dictionary(const ImageSet& train, const ExperimentConfig& config,
                                 const std::filesystem::path& out);
/// Loads the configured codebook file, training and persisting it first if absent.
/// A checksum sidecar (<codebook>.fnv1a64) written at training time is verified on load.
TrainedCodebook ensure_codebook(const ImageSet& train, const ExperimentConfig& config);

struct ExperimentData {
  ImageSet train;
  ImageSet test;
};
/// Train/test subsets from config.dataset (a directory with the standard batch files).
ExperimentData load_experiment_data(const ExperimentConfig& config, bool need_test = true);

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
  std::uint64_t codebook_checksum = 0;
};

ExperimentResult run_experiment1(const ExperimentConfig& config);
ExperimentResult run_experiment2(const ExperimentConfig& config);

}  // namespace sparsecode
