#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparsecode/bench.hpp"
#include "sparsecode/codebook_io.hpp"

namespace sparsecode {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

fs::path sidecar(const fs::path& codebook) { return fs::path(codebook.string() + ".fnv1a64"); }

void write_text(const fs::path& path, const std::string& text) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  write_file(path, std::span<const std::uint8_t>(p, text.size()));
}

// Reconstruction patches are drawn from a stream distinct from the library sample.
constexpr std::uint64_t kReconstructionStream = 0x9e3779b97f4a7c15ULL;

struct Cell {
  PatchEncoder encoder;
  double setup_seconds;
};

Cell make_cell(const Dictionary& dictionary, const AlgorithmRun& run, int budget, const ExperimentConfig& c) {
  const auto t0 = Clock::now();
  std::optional<PatchEncoder> encoder;
  if (budget == 1 && c.one_step_closed_form) {
    switch (run.algorithm) {
      case Algorithm::Fista:
        encoder = PatchEncoder::one_step(OneStepEncoder::fista_scaled(dictionary, run.lambda, c.non_negative));
        break;
      case Algorithm::Sparsa:
        encoder = PatchEncoder::one_step(OneStepEncoder::soft_threshold(dictionary, run.lambda, c.non_negative));
        break;
      case Algorithm::Admm:
        encoder = PatchEncoder::one_step(OneStepEncoder::admm(dictionary, run.lambda, *run.rho, c.non_negative));
        break;
      case Algorithm::Blasso: break;
    }
  }
  if (!encoder)
    encoder = PatchEncoder::iterative(dictionary, run.solver_config(budget, c.convergence_tol), run.lambda,
                                      c.non_negative);
  encoder->prepare();
  return {std::move(*encoder), seconds_since(t0)};
}

ResultRow base_row(const AlgorithmRun& run, int budget) {
  ResultRow row;
  row.algorithm = run.name;
  row.budget = budget;
  if (run.algorithm != Algorithm::Blasso) row.lambda = run.lambda;
  if (run.algorithm == Algorithm::Admm) row.rho = run.rho;
  if (run.algorithm == Algorithm::Blasso) row.epsilon = run.epsilon;
  return row;
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

ExperimentResult write_outputs(const ExperimentConfig& config, std::vector<ResultRow> rows, const std::string& stem,
                               const std::string& metric_name, const TrainedCodebook& codebook) {
  ExperimentResult result;
  result.rows = std::move(rows);
  result.codebook_checksum = codebook.checksum;
  result.csv_path = config.output_dir / (stem + ".csv");
  result.json_path = config.output_dir / (stem + ".json");
  write_text(result.csv_path, format_csv(result.rows, metric_name));
  json mirror{{"config", config_to_json(config)},
              {"codebook", {{"path", codebook.path.string()}, {"fnv1a64", hex64(codebook.checksum)}}},
              {"rows", rows_to_json(result.rows)}};
  write_text(result.json_path, mirror.dump(2) + "\n");
  return result;
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows, const std::string& metric_name) {
  std::ostringstream out;
  out << "algorithm,budget,encode_seconds," << metric_name << ",lambda,rho,epsilon\n";
  for (const auto& r : rows) {
    if (r.metric_name != metric_name) throw ArgumentError("format_csv: row metric differs from the header metric");
    out << r.algorithm << ',' << r.budget << ',' << number(r.encode_seconds) << ',' << number(r.metric) << ','
        << cell(r.lambda) << ',' << cell(r.rho) << ',' << cell(r.epsilon) << '\n';
  }
  return out.str();
}

json rows_to_json(const std::vector<ResultRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j{{"algorithm", r.algorithm},       {"budget", r.budget},   {"encode_seconds", r.encode_seconds},
           {"setup_seconds", r.setup_seconds}, {r.metric_name, r.metric}, {"diverged", r.diverged}};
    j["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
    j["rho"] = r.rho ? json(*r.rho) : json(nullptr);
    j["epsilon"] = r.epsilon ? json(*r.epsilon) : json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

TrainedCodebook train_dictionary(const ImageSet& train, const ExperimentConfig& config, const fs::path& out) {
  PatchExtraction sampling;
  sampling.limit = config.library_size;
  sampling.seed = config.seeds.patches;
  SignalBatch library = normalize_patches(extract_patches(train, sampling), config.eps_norm);
  WhiteningTransform whitening = fit_whitening(library, config.eps_zca);
  Matrix whitened = std::move(library).release();
  whitening.apply_inplace(whitened);
  Codebook codebook =
      train_codebook(SignalBatch(std::move(whitened)), config.codebook_size, config.kmeans_iterations, config.seeds.kmeans);

  const auto bytes = serialize_codebook(whitening, codebook.dictionary);
  write_file(out, bytes);
  TrainedCodebook result{std::move(whitening), codebook.dictionary, out, fnv1a64(bytes), true};
  write_text(sidecar(out), hex64(result.checksum) + "\n");
  return result;
}

TrainedCodebook ensure_codebook(const ImageSet& train, const ExperimentConfig& config) {
  const fs::path path = config.resolved_codebook_path();
  if (!fs::exists(path)) return train_dictionary(train, config, path);

  const auto bytes = read_file(path);
  const std::uint64_t checksum = fnv1a64(bytes);
  if (fs::exists(sidecar(path))) {
    std::ifstream in(sidecar(path));
    std::string expected;
    in >> expected;
    if (expected != hex64(checksum))
      throw FormatError("codebook checksum mismatch for " + path.string() + ": expected " + expected, 0);
  }
  CodebookArtifact artifact = parse_codebook(bytes);
  const Index dim = 6 * 6 * kChannels;
  if (artifact.dictionary.dim() != dim || artifact.dictionary.size() != config.codebook_size)
    throw ConfigError("existing codebook " + path.string() + " does not match codebook.size or the patch size");
  return {std::move(artifact.whitening), std::move(artifact.dictionary), path, checksum, false};
}

ExperimentData load_experiment_data(const ExperimentConfig& config, bool need_test) {
  if (!fs::is_directory(config.dataset))
    throw ArgumentError("dataset directory not found: " + config.dataset.string());
  ExperimentData data;
  const auto train_files = cifar10_train_files(config.dataset);
  data.train = load_cifar10(std::span<const fs::path>(train_files), config.train_count, config.seeds.data);
  if (need_test) {
    const auto test_files = cifar10_test_files(config.dataset);
    data.test = load_cifar10(std::span<const fs::path>(test_files), config.test_count, config.seeds.data + 1);
  }
  return data;
}

ExperimentResult run_experiment1(const ExperimentConfig& config) {
  config.validate();
  const ExperimentData data = load_experiment_data(config, true);
  const TrainedCodebook codebook = ensure_codebook(data.train, config);

  EncodeOptions options;
  options.eps_norm = config.eps_norm;
  options.threads = config.threads;

  std::vector<ResultRow> rows;
  for (const auto& run : config.algorithms) {
    for (int budget : run.budgets) {
      ResultRow row = base_row(run, budget);
      row.metric_name = "accuracy";
      // A fresh dictionary handle per cell keeps factorization caches out of other cells' setup time.
      const Dictionary dictionary(codebook.dictionary.atoms());
      Cell c = make_cell(dictionary, run, budget, config);
      row.setup_seconds = c.setup_seconds;

      EncodedImages train_features, test_features;
      double total = 0.0;
      for (int r = 0; r < config.timing_runs; ++r) {
        const auto t0 = Clock::now();
        train_features = encode_images(data.train, codebook.whitening, c.encoder, options);
        test_features = encode_images(data.test, codebook.whitening, c.encoder, options);
        total += seconds_since(t0);
      }
      row.encode_seconds = total / config.timing_runs;
      row.diverged = train_features.diverged_columns + test_features.diverged_columns > 0;

      const PenaltySelection selection = select_l2_penalty(train_features.features, data.train.labels,
                                                           config.penalty_grid, config.holdout_fraction);
      const LinearClassifier classifier =
          train_classifier(train_features.features, data.train.labels, selection.penalty);
      row.metric = evaluate(classifier, test_features.features, data.test.labels);
      rows.push_back(std::move(row));
    }
  }
  return write_outputs(config, std::move(rows), "experiment1", "accuracy", codebook);
}

ExperimentResult run_experiment2(const ExperimentConfig& config) {
  config.validate();
  const ExperimentData data = load_experiment_data(config, false);
  const TrainedCodebook codebook = ensure_codebook(data.train, config);

  PatchExtraction sampling;
  sampling.limit = config.reconstruction_sample;
  sampling.seed = config.seeds.patches ^ kReconstructionStream;
  Matrix patches = std::move(normalize_patches(extract_patches(data.train, sampling), config.eps_norm)).release();
  codebook.whitening.apply_inplace(patches);
  const SignalBatch signals(std::move(patches));

  std::vector<ResultRow> rows;
  ResultRow zero;
  zero.algorithm = "zero";
  zero.metric_name = "mean_reconstruction_error";
  zero.metric = signals.data().colwise().norm().mean();
  rows.push_back(zero);

  std::vector<AlgorithmRun> runs = config.algorithms;
  runs.insert(runs.end(), config.reconstruction_extra.begin(), config.reconstruction_extra.end());
  for (const auto& run : runs) {
    for (int budget : run.budgets) {
      ResultRow row = base_row(run, budget);
      row.metric_name = "mean_reconstruction_error";
      const Dictionary dictionary(codebook.dictionary.atoms());
      Cell c = make_cell(dictionary, run, budget, config);
      row.setup_seconds = c.setup_seconds;

      SolveResult encoded;
      double total = 0.0;
      for (int r = 0; r < config.timing_runs; ++r) {
        const auto t0 = Clock::now();
        encoded = c.encoder.encode(signals);
        total += seconds_since(t0);
      }
      row.encode_seconds = total / config.timing_runs;
      row.diverged = encoded.trace.diverged_columns > 0;
      row.metric = mean_reconstruction_error(dictionary, encoded.codes, signals);
      rows.push_back(std::move(row));
    }
  }
  return write_outputs(config, std::move(rows), "experiment2", "mean_reconstruction_error", codebook);
}

}  // namespace sparsecode
