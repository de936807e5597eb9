#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <random>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/mce.hpp"
#include "test_util.hpp"

using namespace lcm;
using testutil::grid;

namespace {

SaatyMatrix matrix3(double a12, double a13, double a23) {
  Eigen::MatrixXd m(3, 3);
  m << 1, a12, a13, 1 / a12, 1, a23, 1 / a13, 1 / a23, 1;
  return SaatyMatrix(m);
}

struct Oracle {
  double lambda;
  std::vector<double> weights;
};

// Dense general eigensolver; the principal eigenpair is the one with largest real part.
Oracle eigen_oracle(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < m.rows(); ++i) {
    if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v /= v.sum();
  return {es.eigenvalues()(best).real(), std::vector<double>(v.data(), v.data() + v.size())};
}

std::vector<Grid> random_factors(std::mt19937_64& rng, int n, int rows, int cols) {
  std::vector<Grid> out;
  std::uniform_int_distribution<int> u(0, 255);
  for (int k = 0; k < n; ++k) {
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (auto& x : v) x = u(rng);
    out.push_back(grid(rows, cols, v));
  }
  return out;
}

std::vector<double> random_weights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = u(rng);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

BinaryMask make_random_constraint(std::mt19937_64& rng, int rows, int cols) {
  std::bernoulli_distribution b(0.8);
  std::vector<std::uint8_t> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = b(rng);
  return BinaryMask(testutil::geometry(rows, cols), v);
}

}  // namespace

TEST_CASE("consistent pairwise matrices") {
  Eigen::MatrixXd two(2, 2);
  two << 1, 3, 1.0 / 3, 1;
  const WeightSet w2 = saaty_weights(SaatyMatrix(two));
  CHECK(w2.weights[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w2.weights[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w2.consistency_ratio == 0.0);

  const WeightSet w3 = saaty_weights(matrix3(2, 4, 2));
  CHECK(w3.weights[0] == doctest::Approx(4.0 / 7).epsilon(1e-12));
  CHECK(w3.weights[1] == doctest::Approx(2.0 / 7).epsilon(1e-12));
  CHECK(w3.weights[2] == doctest::Approx(1.0 / 7).epsilon(1e-12));
  CHECK(w3.lambda_max == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(w3.consistency_ratio) < 1e-9);
}

TEST_CASE("weights recovered from consistent matrices") {
  std::mt19937_64 rng(3);
  for (int n = 2; n <= 9; ++n) {
    // Keep every ratio inside the 1/9..9 scale.
    std::uniform_real_distribution<double> u(1.0, 3.0);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (auto& x : w) x = u(rng);
    const WeightSet ws = saaty_weights(SaatyMatrix::from_weights(w));
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i) CHECK(std::abs(ws.weights[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)] / s) < 1e-9);
    CHECK(std::abs(ws.consistency_ratio) < 1e-9);
    // Scaling the underlying weights changes nothing.
    std::vector<double> scaled = w;
    for (auto& x : scaled) x *= 7.5;
    const WeightSet ws2 = saaty_weights(SaatyMatrix::from_weights(scaled));
    for (int i = 0; i < n; ++i) CHECK(std::abs(ws2.weights[static_cast<std::size_t>(i)] - ws.weights[static_cast<std::size_t>(i)]) < 1e-9);
  }
}

TEST_CASE("inconsistent matrix against a dense eigensolver") {
  const SaatyMatrix m = matrix3(2, 9, 2);
  const WeightSet ws = saaty_weights(m);
  const Oracle o = eigen_oracle(m.matrix());
  CHECK(ws.lambda_max == doctest::Approx(o.lambda).epsilon(1e-9));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(ws.weights[i] - o.weights[i]) < 1e-9);
  CHECK(ws.lambda_max > 3.0);
  const double ci = (o.lambda - 3.0) / 2.0;
  CHECK(ws.consistency_index == doctest::Approx(ci).epsilon(1e-9));
  CHECK(ws.consistency_ratio == doctest::Approx(ci / 0.58).epsilon(1e-9));
  // Frozen reference values from an independent dense eigensolver.
  CHECK(std::abs(ws.lambda_max - 3.073513525473335) < 1e-9);
  CHECK(std::abs(ws.weights[0] - 0.6548067379) < 1e-9);
  CHECK(std::abs(ws.weights[1] - 0.2498555330) < 1e-9);
  CHECK(std::abs(ws.weights[2] - 0.0953377291) < 1e-9);
  CHECK(std::abs(ws.consistency_ratio - 0.0633737289) < 1e-9);
  CHECK(ws.consistent_enough());

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> scale(1, 9);
  std::bernoulli_distribution invert(0.5);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + trial % 6;
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double v = scale(rng);
        if (invert(rng)) v = 1.0 / v;
        a(i, j) = v;
        a(j, i) = 1.0 / v;
      }
    const WeightSet w = saaty_weights(SaatyMatrix(a));
    const Oracle ref = eigen_oracle(a);
    CHECK(w.lambda_max == doctest::Approx(ref.lambda).epsilon(1e-9));
    CHECK(w.lambda_max >= n - 1e-9);
    for (int i = 0; i < n; ++i) CHECK(std::abs(w.weights[static_cast<std::size_t>(i)] - ref.weights[static_cast<std::size_t>(i)]) < 1e-6);
  }
}

TEST_CASE("random index table") {
  CHECK(random_index(1) == 0.0);
  CHECK(random_index(2) == 0.0);
  CHECK(random_index(3) == 0.58);
  CHECK(random_index(10) == 1.49);
  CHECK_THROWS(random_index(11));
}

TEST_CASE("invalid pairwise matrices") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 3, 0.5, 1;
  CHECK_THROWS_AS(SaatyMatrix{m}, Error);
  m << 1, 12, 1.0 / 12, 1;
  CHECK_THROWS_AS(SaatyMatrix{m}, Error);
  m << 2, 3, 1.0 / 3, 1;
  CHECK_THROWS_AS(SaatyMatrix{m}, Error);
}

TEST_CASE("pairwise matrix csv with fractions") {
  const auto dir = testutil::scratch("saaty");
  write_text_file(dir / "m.csv", "1,2,4\n1/2,1,2\n1/4,1/2,1\n");
  const WeightSet w = saaty_weights(SaatyMatrix::read_csv(dir / "m.csv"));
  CHECK(w.weights[0] == doctest::Approx(4.0 / 7).epsilon(1e-12));
}

TEST_CASE("weighted linear combination") {
  const Grid f = grid(1, 3, {0, 17, 255});
  const std::vector<double> one{1.0};
  CHECK(wlc(std::vector<Grid>{f}, one) == f);
  const std::vector<Grid> two{grid(1, 1, {200}), grid(1, 1, {100})};
  const std::vector<double> half{0.5, 0.5};
  CHECK(wlc(two, half)[0] == 150.0);
  const std::vector<BinaryMask> blocked{BinaryMask(testutil::geometry(1, 1), {0})};
  CHECK(wlc(two, half, blocked)[0] == 0.0);
  const std::vector<Grid> gap{grid(1, 1, {200}), grid(1, 1, {kDefaultNodata})};
  CHECK_FALSE(wlc(gap, half).is_valid(0));
  CHECK_THROWS(wlc(two, one));
  const std::vector<Grid> mismatched{grid(1, 1, {1}), grid(1, 2, {1, 2})};
  CHECK_THROWS(wlc(mismatched, half));
}

TEST_CASE("wlc is invariant to factor order and bounded") {
  std::mt19937_64 rng(5);
  auto f = random_factors(rng, 4, 20, 20);
  auto w = random_weights(rng, 4);
  const Grid a = wlc(f, w);
  std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<Grid> pf;
  std::vector<double> pw;
  for (auto p : perm) {
    pf.push_back(f[p]);
    pw.push_back(w[p]);
  }
  const Grid b = wlc(pf, pw);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i] >= 0.0);
    CHECK(a[i] <= 255.0);
  }
}

TEST_CASE("ordered weighted averaging") {
  const std::vector<Grid> f{grid(1, 2, {200, 10}), grid(1, 2, {100, 90})};
  const std::vector<double> w{0.5, 0.5};
  const std::vector<double> low{1, 0}, high{0, 1}, mid{0.5, 0.5};
  const Grid mn = owa(f, w, low), mx = owa(f, w, high);
  CHECK(mn[0] == 100.0);
  CHECK(mn[1] == 10.0);
  CHECK(mx[0] == 200.0);
  CHECK(mx[1] == 90.0);
  CHECK(owa(f, w, mid) == wlc(f, w));
  const std::vector<double> bad{0.7, 0.7};
  CHECK_THROWS(owa(f, w, bad));
}

TEST_CASE("owa with uniform order weights is bit-identical to wlc") {
  std::mt19937_64 rng(21);
  for (int n = 1; n <= 8; ++n) {
    const auto f = random_factors(rng, n, 16, 17);
    const auto w = random_weights(rng, n);
    const std::vector<double> uniform(static_cast<std::size_t>(n), 1.0 / n);
    const std::vector<BinaryMask> c{make_random_constraint(rng, 16, 17)};
    CHECK(owa(f, w, uniform) == wlc(f, w));
    CHECK(owa(f, w, uniform, c) == wlc(f, w, c));
    // Any order weights land between the extremes.
    const auto ow = random_weights(rng, n);
    std::vector<double> lo(static_cast<std::size_t>(n), 0.0), hi(static_cast<std::size_t>(n), 0.0);
    lo.front() = 1.0;
    hi.back() = 1.0;
    const Grid g = owa(f, w, ow), gl = owa(f, w, lo), gh = owa(f, w, hi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g[i] >= gl[i]);
      CHECK(g[i] <= gh[i]);
    }
  }
}
