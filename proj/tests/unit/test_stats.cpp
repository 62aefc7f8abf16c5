#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassbox/stats.hpp"
#include "glassbox/synthetic.hpp"
#include "support.hpp"

#include <cmath>

using namespace glassbox;
using doctest::Approx;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> stdvec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd normals(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// xi from its no-ties definition with quadratic rank counting.
double chatterjee_no_ties(const VectorXd& x, const VectorXd& y) {
  const auto n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r;
  for (auto i : order) {
    double count = 0;
    for (Eigen::Index j = 0; j < n; ++j) count += y[j] <= y[i] ? 1 : 0;
    r.push_back(count);
  }
  double gaps = 0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) gaps += std::abs(r[k + 1] - r[k]);
  const double nd = static_cast<double>(n);
  return 1.0 - 3.0 * gaps / (nd * nd - 1.0);
}

}  // namespace

TEST_CASE("pearson, spearman, kendall examples") {
  const VectorXd x = vec({-2, -1, 0.5, 1, 3, 4});
  CHECK(pearson(x, (2 * x.array() + 1).matrix()) == Approx(1.0).epsilon(1e-15));
  const VectorXd cube = x.array().cube();
  CHECK(spearman(x, cube) == 1.0);
  CHECK(kendall_tau_b(x, cube) == 1.0);
  CHECK(kendall_tau_b(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})) == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(kendall_tau_b(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})) ==
        Approx(oracle::kendall_tau_b({1, 2, 3, 4}, {1, 3, 2, 4})).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(pearson(vec({1, 1, 1}), vec({1, 2, 3})), doctest::Contains("zero variance"), ValidationError);
  CHECK_THROWS_AS(pearson(vec({1}), vec({1})), ValidationError);
  CHECK_THROWS_AS(pearson(vec({1, 2}), vec({1, 2, 3})), ValidationError);
}

TEST_CASE("kendall tau-b matches pair enumeration, with ties") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.uniform_index(120);
    VectorXd x(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      x[static_cast<Eigen::Index>(i)] = static_cast<double>(rng.uniform_index(7));
      y[static_cast<Eigen::Index>(i)] = static_cast<double>(rng.uniform_index(5)) + 0.1 * x[static_cast<Eigen::Index>(i)];
    }
    const double want = oracle::kendall_tau_b(stdvec(x), stdvec(y));
    if (!std::isfinite(want)) continue;
    CHECK(kendall_tau_b(x, y) == Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("spearman is pearson of average ranks") {
  const VectorXd x = vec({3, 1, 4, 1, 5, 9, 2, 6});
  const VectorXd ranks = average_ranks(x);
  CHECK(ranks[1] == 1.5);
  CHECK(ranks[3] == 1.5);
  CHECK(ranks[5] == 8.0);
  const VectorXd y = vec({2, 7, 1, 8, 2, 8, 1, 8});
  CHECK(spearman(x, y) == Approx(pearson(average_ranks(x), average_ranks(y))).epsilon(1e-15));
}

TEST_CASE("rank methods are invariant under increasing transforms") {
  const VectorXd x = normals(300, 1);
  const VectorXd y = (x.array() + normals(300, 2).array()).matrix();
  const VectorXd ex = x.array().exp();
  CHECK(spearman(x, y) == spearman(ex, y));
  CHECK(kendall_tau_b(x, y) == kendall_tau_b(ex, y));
  CHECK(chatterjee_xi(x, y, 4) == chatterjee_xi(ex, y, 4));
  CHECK(chatterjee_xi(x, y, 4) == chatterjee_xi(x, VectorXd(y.array().exp()), 4));
}

TEST_CASE("chatterjee xi") {
  CHECK(chatterjee_xi(vec({1, 2, 3, 4, 5}), vec({2, 4, 6, 8, 10}), 0) == Approx(1.0 - 3.0 / 6.0).epsilon(1e-15));
  CHECK(chatterjee_xi(vec({1, 2, 3}), vec({5, 5, 5}), 0) == 0.0);
  CHECK_THROWS_AS(chatterjee_xi(vec({1}), vec({1}), 0), ValidationError);

  SUBCASE("matches the no-ties definition") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const VectorXd x = normals(200, s), y = normals(200, s + 100);
      CHECK(chatterjee_xi(x, y, s) == Approx(chatterjee_no_ties(x, y)).epsilon(1e-13));
    }
  }
  SUBCASE("noiseless y = x^2 at n = 10000") {
    Rng rng(3);
    VectorXd x(10000);
    for (auto& v : x) v = rng.uniform(-1, 1);
    CHECK(chatterjee_xi(x, VectorXd(x.array().square()), 0) >= 0.95);
    // pearson misses the non-monotone dependence
    CHECK(std::abs(pearson(x, VectorXd(x.array().square()))) < 0.05);
  }
  SUBCASE("independent inputs at n = 10000 across 20 seeds") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      CHECK(std::abs(chatterjee_xi(normals(10000, 2 * s), normals(10000, 2 * s + 1), s)) <= 0.05);
    }
  }
  SUBCASE("ties in x are broken by the seed, ties in y use the tie form") {
    VectorXd x(8), y(8);
    x << 1, 1, 1, 2, 2, 3, 3, 3;
    y << 0, 1, 0, 1, 1, 0, 1, 1;
    const double a = chatterjee_xi(x, y, 1);
    CHECK(a == chatterjee_xi(x, y, 1));
    CHECK(std::isfinite(a));
  }
}

TEST_CASE("correlation matrices") {
  MatrixXd X(10000, 3);
  for (Eigen::Index j = 0; j < 3; ++j) X.col(j) = normals(10000, 40 + static_cast<std::uint64_t>(j));
  const std::vector<std::string> names{"a", "b", "c"};
  for (auto m : {CorrelationMethod::pearson, CorrelationMethod::spearman, CorrelationMethod::kendall,
                 CorrelationMethod::chatterjee}) {
    const auto cm = correlation_matrix(X, names, m, 5);
    CHECK(cm.names == names);
    CHECK(cm.values.diagonal().isOnes());
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        if (i != j) CHECK(std::abs(cm.values(i, j)) <= 0.05);
      }
    }
    if (m != CorrelationMethod::chatterjee) CHECK(cm.values == cm.values.transpose());
    CHECK(correlation_matrix(X, names, m, 5, 3).values == cm.values);
  }

  SUBCASE("identical columns") {
    MatrixXd D(50, 2);
    D.col(0) = normals(50, 8);
    D.col(1) = D.col(0);
    CHECK(correlation_matrix(D, {"a", "b"}, CorrelationMethod::pearson).values(0, 1) == Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("chatterjee holds both orientations") {
    MatrixXd D(2000, 2);
    Rng rng(1);
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
      D(i, 0) = rng.uniform(-1, 1);
      D(i, 1) = D(i, 0) * D(i, 0);
    }
    const auto cm = correlation_matrix(D, {"x", "y"}, CorrelationMethod::chatterjee, 2);
    CHECK(cm.values(0, 1) == chatterjee_xi(D.col(0), D.col(1), 2));
    CHECK(cm.values(0, 1) > 0.9);  // y is a function of x
    CHECK(cm.values(1, 0) < 0.5);  // x is not a function of y
  }
  SUBCASE("constant column under pearson is an error") {
    MatrixXd D(20, 2);
    D.col(0) = normals(20, 1);
    D.col(1).setConstant(2.0);
    CHECK_THROWS_WITH_AS(correlation_matrix(D, {"a", "b"}, CorrelationMethod::pearson),
                         doctest::Contains("zero variance"), ValidationError);
  }
  CHECK(correlation_method_from_string("kendall") == CorrelationMethod::kendall);
  CHECK_THROWS_AS(correlation_method_from_string("distance"), ValidationError);
}

TEST_CASE("VIF against the normal-equations oracle") {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 40 + static_cast<Eigen::Index>(rng.uniform_index(200));
    MatrixXd X(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) X(i, j) = rng.normal();
      X(i, 1) += 0.8 * X(i, 0);
      X(i, 4) += 0.5 * X(i, 2) - 0.3 * X(i, 3);
    }
    const VectorXd got = vif_values(X);
    const VectorXd want = oracle::vif_normal_equations(X);
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(got[j] == Approx(want[j]).epsilon(1e-8));
    CHECK(got.minCoeff() >= 1.0);
  }
}

TEST_CASE("VIF constructed cases") {
  SUBCASE("orthogonal standardized columns give exactly 1") {
    // columns of a Hadamard-like +-1 design are centred and mutually orthogonal
    MatrixXd X(8, 3);
    for (Eigen::Index i = 0; i < 8; ++i) {
      X(i, 0) = (i & 1) ? 1 : -1;
      X(i, 1) = (i & 2) ? 1 : -1;
      X(i, 2) = (i & 4) ? 1 : -1;
    }
    const VectorXd v = vif_values(X);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(v[j] - 1.0) < 1e-9);
  }
  SUBCASE("R^2 = 0.9 gives VIF 10") {
    const Eigen::Index n = 500;
    VectorXd z1 = normals(n, 1), z2 = normals(n, 2);
    z1.array() -= z1.mean();
    z2.array() -= z2.mean();
    z2 -= (z2.dot(z1) / z1.squaredNorm()) * z1;
    z2 *= z1.norm() / z2.norm();
    MatrixXd X(n, 2);
    X.col(0) = 3.0 * z1 + z2;  // explained share 9 / (9 + 1)
    X.col(1) = z1;
    CHECK(vif_values(X)[0] == Approx(10.0).epsilon(1e-10));
  }
  SUBCASE("duplicate plus noise is severe") {
    MatrixXd X(1000, 3);
    X.col(0) = normals(1000, 3);
    X.col(1) = X.col(0) + 0.1 * normals(1000, 4);
    X.col(2) = normals(1000, 5);
    const VectorXd v = vif_values(X);
    CHECK(v[0] > 10.0);
    CHECK(v[1] > 10.0);
    CHECK(v[2] < 1.1);
  }
  SUBCASE("exact collinearity is flagged infinite and the run continues") {
    MatrixXd X(100, 3);
    X.col(0) = normals(100, 6);
    X.col(1) = normals(100, 7);
    X.col(2) = 2.0 * X.col(0) - X.col(1);
    const auto table = vif_table(X, {"a", "b", "c"}, 20, 3);
    for (const auto& r : table.rows) CHECK(r.infinite);
  }
}

TEST_CASE("VIF table: bootstrap SE and interval") {
  MatrixXd X(300, 4);
  for (Eigen::Index j = 0; j < 4; ++j) X.col(j) = normals(300, 10 + static_cast<std::uint64_t>(j));
  X.col(3) += 0.7 * X.col(0);
  const auto table = vif_table(X, {"a", "b", "c", "d"}, 100, 9);
  const VectorXd point = vif_values(X);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.bootstrap_b == 100);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto& r = table.rows[j];
    CHECK(r.vif == point[static_cast<Eigen::Index>(j)]);
    CHECK(r.standard_error >= 0.0);
    CHECK(r.ci_lower <= r.vif);
    CHECK(r.vif <= r.ci_upper);
    CHECK(r.ci_upper - r.vif == Approx(1.96 * r.standard_error));
  }
  const auto again = vif_table(X, {"a", "b", "c", "d"}, 100, 9, 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(again.rows[j].standard_error == table.rows[j].standard_error);

  const Dataset ds = make_monotone(200, 3, 1, 1.0, 2);
  CHECK(vif_table(ds, 10, 1).rows.size() == 3);
}
