#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "sparsecode/codebook_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "sparsecode_cli_test.log";
  const std::string cmd = std::string(SPARSECODE_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("").code == 2);
  const Run r = cli("frobnicate");
  CHECK(r.code == 2);
  CHECK(r.out.find("Usage") != std::string::npos);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("solve reproduces the bundled oracle objective") {
  const fs::path fixture = fs::path(SPARSECODE_TEST_DATA) / "lasso_6x12.json";
  std::ifstream in(fixture);
  const auto doc = nlohmann::json::parse(in);
  const double expected = doc["oracle_objective"].get<double>();

  // Re-derive the fixture value with the in-tree oracle.
  oracle::Mat w(6, 12);
  oracle::Vec x(6);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 12; ++c) w(r, c) = doc["dictionary"][r][c].get<double>();
    x[r] = doc["signals"][r][0].get<double>();
  }
  const double lambda = doc["lambda"].get<double>();
  CHECK(std::abs(oracle::lasso_objective(w, x, oracle::coordinate_descent(w, x, lambda), lambda) - expected) <= 1e-12);

  for (const char* algo : {"fista", "sparsa"}) {
    const Run r = cli(std::string("solve ") + fixture.string() + " --algorithm " + algo + " --budget 5000 --tol 0");
    CHECK(r.code == 0);
    const auto pos = r.out.find("final_objective ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(r.out.substr(pos + 16)) - expected) <= 1e-8);
  }
  const Run admm = cli("solve " + fixture.string() + " --algorithm admm --rho 1 --budget 5000 --tol 0");
  CHECK(std::abs(std::stod(admm.out.substr(admm.out.find("final_objective ") + 16)) - expected) <= 1e-8);

  CHECK(cli("solve " + fixture.string() + " --algorithm admm").code == 2);
  CHECK(cli("solve /nonexistent.json").code == 2);
}

TEST_CASE("solve reports divergence with exit code 4") {
  const fs::path dir = fixtures::scratch("cli_diverge");
  write(dir / "p.json", R"({"dictionary": [[1e300, 1e300], [1e300, 1e300]], "signals": [[1], [1]], "lambda": 0})");
  CHECK(cli("solve " + (dir / "p.json").string() + " --algorithm sparsa --budget 50").code == 4);
  write(dir / "bad.json", "{ not json");
  CHECK(cli("solve " + (dir / "bad.json").string()).code == 3);
}

TEST_CASE("train-dict, encode, exp1 and exp2 on a synthetic dataset") {
  const fs::path data = fixtures::synthetic_cifar("cli_data", 20);
  const fs::path out = fixtures::scratch("cli_out");
  sparsecode::ExperimentConfig c = fixtures::small_config(data, out);
  c.train_count = 40;
  c.test_count = 20;
  c.algorithms.resize(2);
  const fs::path config = out / "c.json";
  write(config, sparsecode::config_to_json(c).dump(2));

  const fs::path a = out / "a.pxc", b = out / "b.pxc";
  CHECK(cli("train-dict --config " + config.string() + " --seed 9 --out " + a.string()).code == 0);
  CHECK(cli("train-dict --config " + config.string() + " --seed 9 --out " + b.string()).code == 0);
  CHECK(sparsecode::read_file(a) == sparsecode::read_file(b));

  const Run enc = cli("encode --config " + config.string() + " --codebook " + a.string() + " " +
                      (data / "test_batch.bin").string() + " --algorithm sparsa --budget 1 --lambda 0.1 --out " +
                      (out / "features.json").string());
  CHECK(enc.code == 0);
  std::ifstream fin(out / "features.json");
  const auto features = nlohmann::json::parse(fin);
  CHECK(features["features"].size() == 20);
  CHECK(features["features"][0].size() == 4 * 16);

  const Run e1 = cli("exp1 --config " + config.string() + " --out " + (out / "run").string());
  CHECK(e1.code == 0);
  std::ifstream csv(out / "run" / "experiment1.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "algorithm,budget,encode_seconds,accuracy,lambda,rho,epsilon");
  CHECK(cli("exp2 --config " + config.string() + " --out " + (out / "run").string()).code == 0);
  CHECK(fs::exists(out / "run" / "experiment2.csv"));

  write(out / "broken.json", R"({"codebook": {"size": -3}})");
  CHECK(cli("exp1 --config " + (out / "broken.json").string()).code == 2);
  std::vector<std::uint8_t> junk(100, 0);
  sparsecode::write_file(out / "junk.pxc", junk);
  CHECK(cli("encode --config " + config.string() + " --codebook " + (out / "junk.pxc").string() + " " +
            (data / "test_batch.bin").string())
            .code == 3);
}
