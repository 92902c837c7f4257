// sparsecode command-line front end: dictionary training, encoding, experiments, ad-hoc solves.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "sparsecode/bench.hpp"
#include "sparsecode/codebook_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparsecode;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kFormat = 3, kDiverged = 4 };

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct SolverOptions {
  std::string algorithm = "fista";
  int budget = 100;
  std::optional<double> lambda;
  std::optional<double> rho;
  std::optional<double> epsilon;
  double tol = 1e-6;
};

ExperimentConfig make_config(const GlobalOptions& g, bool out_is_dir) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig::defaults() : load_config(g.config);
  if (g.seed) c.set_seed(*g.seed);
  if (out_is_dir && !g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

// Rows-of-numbers JSON array to a matrix.
Matrix json_matrix(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
    throw FormatError(what + ": expected a non-empty array of rows", 0);
  const Index r = static_cast<Index>(rows.size()), c = static_cast<Index>(rows[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) throw FormatError(what + ": ragged rows", 0);
    for (Index j = 0; j < c; ++j) {
      const auto& v = row[static_cast<std::size_t>(j)];
      if (!v.is_number()) throw FormatError(what + ": non-numeric entry", 0);
      m(i, j) = v.get<double>();
    }
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

SolverConfig solver_config(const SolverOptions& s) {
  AlgorithmRun run;
  run.algorithm = parse_algorithm(s.algorithm);
  run.rho = s.rho;
  run.epsilon = s.epsilon;
  SolverConfig c = run.solver_config(s.budget, s.tol);
  c.trace_objective = true;
  c.validate();
  return c;
}

void emit(const std::string& out, const json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const std::string text = j.dump(2) + "\n";
  write_file(out, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int cmd_train_dict(const GlobalOptions& g) {
  ExperimentConfig c = make_config(g, false);
  const fs::path out = g.out.empty() ? c.resolved_codebook_path() : fs::path(g.out);
  const ImageSet train = load_experiment_data(c, false).train;
  const TrainedCodebook cb = train_dictionary(train, c, out);
  std::printf("codebook %s n=%lld K=%lld fnv1a64=%016llx\n", out.string().c_str(),
              static_cast<long long>(cb.dictionary.dim()), static_cast<long long>(cb.dictionary.size()),
              static_cast<unsigned long long>(cb.checksum));
  return kOk;
}

int cmd_encode(const GlobalOptions& g, const std::string& codebook_path, const std::string& input,
               const SolverOptions& s) {
  const ExperimentConfig c = make_config(g, false);
  const CodebookArtifact cb = load_codebook(codebook_path.empty() ? c.resolved_codebook_path() : fs::path(codebook_path));
  const double lambda = s.lambda.value_or(0.1);
  const PatchEncoder encoder = s.budget == 1 && parse_algorithm(s.algorithm) != Algorithm::Blasso
                                   ? [&] {
                                       switch (parse_algorithm(s.algorithm)) {
                                         case Algorithm::Fista:
                                           return PatchEncoder::one_step(
                                               OneStepEncoder::fista_scaled(cb.dictionary, lambda, c.non_negative));
                                         case Algorithm::Admm:
                                           return PatchEncoder::one_step(OneStepEncoder::admm(
                                               cb.dictionary, lambda, s.rho.value_or(0.0), c.non_negative));
                                         default:
                                           return PatchEncoder::one_step(
                                               OneStepEncoder::soft_threshold(cb.dictionary, lambda, c.non_negative));
                                       }
                                     }()
                                   : PatchEncoder::iterative(cb.dictionary, solver_config(s), lambda, c.non_negative);

  if (fs::path(input).extension() == ".bin") {
    const ImageSet images = load_cifar10(fs::path(input), std::nullopt, 0);
    EncodeOptions options;
    options.eps_norm = c.eps_norm;
    options.threads = c.threads;
    const EncodedImages encoded = encode_images(images, cb.whitening, encoder, options);
    emit(g.out, json{{"features", matrix_json(encoded.features.transpose())}, {"labels", images.labels}});
    return encoded.diverged_columns > 0 ? kDiverged : kOk;
  }
  const json doc = read_json(input);
  if (!doc.contains("patches")) throw FormatError(input + ": missing 'patches'", 0);
  Matrix patches = json_matrix(doc["patches"], "patches").transpose();
  if (patches.rows() != cb.whitening.dim()) throw DimensionError("patch length does not match the codebook");
  normalize_patches_inplace(patches, c.eps_norm);
  cb.whitening.apply_inplace(patches);
  const SolveResult result = encoder.encode(SignalBatch(std::move(patches)));
  emit(g.out, json{{"codes", matrix_json(result.codes.data().transpose())}});
  return result.trace.termination == Termination::Diverged ? kDiverged : kOk;
}

int cmd_experiment(const GlobalOptions& g, int which) {
  const ExperimentConfig c = make_config(g, true);
  const ExperimentResult r = which == 1 ? run_experiment1(c) : run_experiment2(c);
  std::printf("%s (%zu rows, codebook fnv1a64=%016llx)\n", r.csv_path.string().c_str(), r.rows.size(),
              static_cast<unsigned long long>(r.codebook_checksum));
  return kOk;
}

int cmd_solve(const GlobalOptions& g, const std::string& problem_path, SolverOptions s) {
  const json doc = read_json(problem_path);
  for (const char* key : {"dictionary", "signals"})
    if (!doc.contains(key)) throw FormatError(problem_path + ": missing '" + key + "'", 0);
  double lambda = doc.value("lambda", 0.1);
  if (s.lambda) lambda = *s.lambda;
  const bool non_negative = doc.value("non_negative", false);
  if (!s.rho && doc.contains("rho")) s.rho = doc["rho"].get<double>();
  if (!s.epsilon && doc.contains("epsilon")) s.epsilon = doc["epsilon"].get<double>();

  const SparseCodingProblem problem(Dictionary(json_matrix(doc["dictionary"], "dictionary")),
                                    SignalBatch(json_matrix(doc["signals"], "signals")), lambda, non_negative);
  const SolveResult result = solve(problem, solver_config(s));
  std::printf("iteration objective reconstruction_error seconds\n");
  for (const auto& rec : result.trace.records)
    std::printf("%d %.17g %.17g %.9f\n", rec.iteration, rec.objective, rec.reconstruction_error, rec.seconds);
  const double final_objective = objective(problem, result.codes).mean();
  std::printf("termination %s\n", std::string(to_string(result.trace.termination)).c_str());
  std::printf("final_objective %.17g\n", final_objective);
  if (!g.out.empty())
    emit(g.out, json{{"codes", matrix_json(result.codes.data())},
                     {"final_objective", final_objective},
                     {"termination", std::string(to_string(result.trace.termination))}});
  return result.trace.termination == Termination::Diverged ? kDiverged : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse coding solvers, one-step encoders and the patch-feature benchmark"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--seed", g.seed, "Overrides all seeds (data = seed, patches = seed + 1, kmeans = seed + 2)");
  app.add_option("--out", g.out, "Output path (codebook file, output directory or JSON result)");

  auto* train = app.add_subcommand("train-dict", "Train and persist the whitening + K-means codebook");

  SolverOptions s;
  auto add_solver_options = [&s](CLI::App* sub) {
    sub->add_option("--algorithm", s.algorithm, "fista | sparsa | admm | blasso");
    sub->add_option("--budget", s.budget, "Iteration budget")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", s.lambda, "Regularization weight");
    sub->add_option("--rho", s.rho, "ADMM penalty");
    sub->add_option("--epsilon", s.epsilon, "BLasso step size");
    sub->add_option("--tol", s.tol, "Per-column convergence tolerance");
  };

  std::string codebook, input;
  auto* encode = app.add_subcommand("encode", "Encode a CIFAR-10 batch file (pooled features) or a JSON patch file");
  encode->add_option("--codebook", codebook, "Codebook file (default: from config)");
  encode->add_option("input", input, "Input .bin CIFAR-10 records or JSON {\"patches\": [[...], ...]}")->required();
  add_solver_options(encode);

  auto* exp1 = app.add_subcommand("exp1", "Accuracy vs. encode time");
  auto* exp2 = app.add_subcommand("exp2", "Reconstruction error vs. encode time");

  std::string problem;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an ad-hoc problem from a JSON file and print the trace");
  solve_cmd->add_option("problem", problem, "JSON {\"dictionary\": rows, \"signals\": rows, \"lambda\": ...}")
      ->required();
  add_solver_options(solve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kConfig;
  }

  try {
    if (train->parsed()) return cmd_train_dict(g);
    if (encode->parsed()) return cmd_encode(g, codebook, input, s);
    if (exp1->parsed()) return cmd_experiment(g, 1);
    if (exp2->parsed()) return cmd_experiment(g, 2);
    if (solve_cmd->parsed()) return cmd_solve(g, problem, s);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return kConfig;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return kConfig;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  std::cerr << app.help();
  return kConfig;
}
