#pragma once

#include <filesystem>
#include <string>

#include "sparsecode/bench.hpp"
#include "synthetic.hpp"

namespace fixtures {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sparsecode_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A CIFAR-10 style directory (five training batches and a test batch) of synthetic gratings.
inline std::filesystem::path synthetic_cifar(const std::string& name, std::size_t per_batch = 40) {
  const auto dir = scratch(name);
  for (int b = 1; b <= 5; ++b)
    sparsecode::write_cifar10(dir / ("data_batch_" + std::to_string(b) + ".bin"),
                              synthetic::gratings(per_batch, 100 + b));
  sparsecode::write_cifar10(dir / "test_batch.bin", synthetic::gratings(per_batch, 200));
  return dir;
}

/// Small, fast experiment configuration over a synthetic dataset.
inline sparsecode::ExperimentConfig small_config(const std::filesystem::path& data, const std::filesystem::path& out) {
  using namespace sparsecode;
  ExperimentConfig c = ExperimentConfig::defaults();
  c.dataset = data;
  c.output_dir = out;
  c.train_count = 60;
  c.test_count = 30;
  c.library_size = 3000;
  c.reconstruction_sample = 300;
  c.codebook_size = 16;
  c.kmeans_iterations = 5;
  c.threads = 2;
  c.penalty_grid = {1e-2, 1.0};
  for (auto& run : c.algorithms) run.budgets = run.algorithm == Algorithm::Blasso ? std::vector<int>{2, 4}
                                                                                   : std::vector<int>{1, 3};
  for (auto& run : c.reconstruction_extra) run.budgets = {1, 3};
  return c;
}

}  // namespace fixtures
