#include <doctest.h>

#include <limits>
#include <thread>

#include "oracle.hpp"
#include "sparsecode/core.hpp"

using namespace sparsecode;

TEST_CASE("SignalBatch rejects empty and non-finite input") {
  CHECK_THROWS_AS(SignalBatch(Matrix(0, 3)), ArgumentError);
  CHECK_THROWS_AS(SignalBatch(Matrix(3, 0)), ArgumentError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SignalBatch{bad}, ArgumentError);
  SignalBatch ok(Matrix::Ones(3, 5));
  CHECK(ok.columns(1, 2).count() == 2);
  CHECK_THROWS_AS(ok.columns(4, 2), DimensionError);
}

TEST_CASE("objective on hand-computed cases") {
  Dictionary eye(Matrix::Identity(2, 2));
  Matrix x(2, 1);
  x << 1, 0;
  Matrix z(2, 1);
  z << 1, 0;
  CHECK(objective(SparseCodingProblem(eye, SignalBatch(x), 0.0), CodeBatch(z))[0] == doctest::Approx(0.0));
  CHECK(objective(SparseCodingProblem(eye, SignalBatch(x), 0.5), CodeBatch::zeros(2, 1))[0] == doctest::Approx(0.5));

  Matrix neg(2, 1);
  neg << -0.1, 0;
  const Vector f = objective(SparseCodingProblem(eye, SignalBatch(x), 0.5, true), CodeBatch(neg));
  CHECK(std::isinf(f[0]));
  CHECK(f[0] > 0);

  CHECK_THROWS_AS(objective(SparseCodingProblem(eye, SignalBatch(x), 0.5), CodeBatch::zeros(3, 1)), DimensionError);
  CHECK_THROWS_AS(SparseCodingProblem(Dictionary(Matrix::Identity(3, 3)), SignalBatch(x), 0.1), DimensionError);
  CHECK_THROWS_AS(SparseCodingProblem(eye, SignalBatch(x), -0.1), ArgumentError);
}

TEST_CASE("reconstruction error") {
  std::mt19937_64 rng(11);
  SUBCASE("zero codes give the signal norm") {
    const Matrix w = oracle::gaussian(4, 8, rng), x = oracle::gaussian(4, 3, rng);
    const Vector e = reconstruction_error(Dictionary(w), CodeBatch::zeros(8, 3), SignalBatch(x));
    for (int j = 0; j < 3; ++j) CHECK(e[j] == doctest::Approx(x.col(j).norm()).epsilon(1e-14));
  }
  SUBCASE("exact solve on a square invertible dictionary") {
    const Matrix w = oracle::gaussian(5, 5, rng) + 5.0 * Matrix::Identity(5, 5);
    const Matrix x = oracle::gaussian(5, 2, rng);
    const Matrix z = w.fullPivLu().solve(x);
    CHECK(reconstruction_error(Dictionary(w), CodeBatch(z), SignalBatch(x)).maxCoeff() <= 1e-10);
  }
  SUBCASE("matches an elementwise recomputation") {
    const Matrix w = oracle::gaussian(4, 8, rng), z = oracle::gaussian(8, 6, rng), x = oracle::gaussian(4, 6, rng);
    const Vector e = reconstruction_error(Dictionary(w), CodeBatch(z), SignalBatch(x));
    for (int j = 0; j < 6; ++j) {
      double s = 0.0;
      for (int r = 0; r < 4; ++r) {
        double acc = -x(r, j);
        for (int c = 0; c < 8; ++c) acc += w(r, c) * z(c, j);
        s += acc * acc;
      }
      CHECK(std::abs(e[j] - std::sqrt(s)) <= 1e-12);
    }
    CHECK(mean_reconstruction_error(Dictionary(w), CodeBatch(z), SignalBatch(x)) == doctest::Approx(e.mean()));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(reconstruction_error(Dictionary(Matrix::Identity(2, 2)), CodeBatch::zeros(2, 2),
                                         SignalBatch(Matrix::Ones(2, 3))),
                    DimensionError);
  }
}

TEST_CASE("Lipschitz constant") {
  CHECK(lipschitz_constant(Dictionary(2.0 * Matrix::Identity(3, 3))) == doctest::Approx(4.0).epsilon(1e-9));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 3;
  CHECK(lipschitz_constant(Dictionary(d)) == doctest::Approx(9.0).epsilon(1e-9));

  std::mt19937_64 rng(5);
  for (auto [n, k] : {std::pair{10, 30}, std::pair{30, 10}}) {
    const Matrix w = oracle::gaussian(n, k, rng);
    const double expected = oracle::top_eigenvalue(w);
    CHECK(std::abs(lipschitz_constant(Dictionary(w)) - expected) / expected <= 1e-6);
  }

  const Dictionary zero(Matrix::Zero(3, 4));
  CHECK(zero.lipschitz().degenerate);
  CHECK(zero.lipschitz().value == 0.0);
}

TEST_CASE("RidgeSolver agrees with a dense solve on both branches") {
  std::mt19937_64 rng(9);
  for (auto [n, k] : {std::pair{6, 12}, std::pair{12, 6}}) {
    const Matrix w = oracle::gaussian(n, k, rng);
    const Matrix rhs = oracle::gaussian(k, 4, rng);
    for (double rho : {0.1, 1.0, 30.0}) {
      RidgeSolver solver(w, rho);
      CHECK(solver.uses_inversion_identity() == (k > n));
      const Matrix expected = (w.transpose() * w + rho * Matrix::Identity(k, k)).colPivHouseholderQr().solve(rhs);
      CHECK((solver.apply(rhs) - expected).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  CHECK_THROWS_AS(RidgeSolver(Matrix::Identity(2, 2), 0.0), ArgumentError);
  CHECK_THROWS_AS(RidgeSolver(Matrix::Identity(2, 2), -1.0), ArgumentError);
  CHECK_THROWS_AS(RidgeSolver(Matrix::Identity(2, 2), 1.0).apply(Matrix::Ones(3, 1)), DimensionError);
}

TEST_CASE("Dictionary caches are shared between copies and safe under concurrent first use") {
  std::mt19937_64 rng(2);
  const Dictionary d(oracle::gaussian(8, 16, rng));
  const Dictionary copy = d;
  CHECK(&copy.atoms() == &d.atoms());

  std::vector<std::thread> threads;
  std::vector<const LipschitzEstimate*> seen(8);
  std::vector<std::shared_ptr<const RidgeSolver>> solvers(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] {
      seen[i] = &copy.lipschitz();
      solvers[i] = d.ridge_solver(2.0);
    });
  for (auto& t : threads) t.join();
  for (int i = 1; i < 8; ++i) {
    CHECK(seen[i] == seen[0]);
    CHECK(solvers[i] == solvers[0]);
  }
  CHECK(&d.gram() == &copy.gram());
  CHECK((d.gram() - d.atoms().transpose() * d.atoms()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(d.ridge_solver(3.0) != d.ridge_solver(2.0));
}

TEST_CASE("Dictionary::normalized") {
  Matrix w(2, 3);
  w << 3, 0, 0, 4, 0, 0;
  const Dictionary d = Dictionary::normalized(w);
  CHECK(d.atoms()(0, 0) == doctest::Approx(0.6));
  CHECK(d.atoms()(1, 0) == doctest::Approx(0.8));
  CHECK(d.atoms().col(2).norm() == 0.0);
  CHECK_FALSE(d.unit_norm());
  CHECK(Dictionary::normalized(w.leftCols(1)).unit_norm());
  CHECK_THROWS(Dictionary(Matrix(0, 2)));
}

TEST_CASE("Termination names") {
  CHECK(to_string(Termination::Converged) == "converged");
  CHECK(to_string(Termination::Diverged) == "diverged");
  CHECK(to_string(Termination::BudgetExhausted) == "budget_exhausted");
}

TEST_CASE("column_product is independent of the other columns") {
  std::mt19937_64 rng(5);
  const Matrix a = oracle::gaussian(13, 7, rng);
  const Matrix b = oracle::gaussian(7, 11, rng);
  const Matrix full = column_product(a, b);
  CHECK((full - a * b).cwiseAbs().maxCoeff() < 1e-12);
  for (Index j = 0; j < b.cols(); ++j) {
    const Matrix single = column_product(a, Matrix(b.col(j)));
    CHECK((single.col(0) - full.col(j)).cwiseAbs().maxCoeff() == 0.0);
  }
  const Matrix tail = column_product(a, b.rightCols(6));
  CHECK((tail - full.rightCols(6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(column_product(a, Matrix(6, 2)), DimensionError);
}

TEST_CASE("ordered reductions") {
  const Vector v = (Vector(4) << 3.0, -4.0, 0.0, 1.0).finished();
  const Vector u = Vector::Ones(4);
  CHECK(ordered_squared_norm(v) == 26.0);
  CHECK(ordered_abs_sum(v) == 8.0);
  CHECK(ordered_squared_distance(v, u) == 4.0 + 25.0 + 1.0 + 0.0);
  CHECK_THROWS_AS(ordered_squared_distance(v, Vector::Ones(3)), DimensionError);
}
