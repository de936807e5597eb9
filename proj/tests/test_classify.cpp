#include <doctest.h>

#include <cmath>
#include <random>

#include "lcm/classify.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "test_util.hpp"

using namespace lcm;
using testutil::grid;

namespace {

ClassSignature one_band(int id, double mean, double var, double prior) {
  ClassSignature s;
  s.class_id = id;
  s.mean = Eigen::VectorXd::Constant(1, mean);
  s.covariance = Eigen::MatrixXd::Constant(1, 1, var);
  s.prior = prior;
  s.sample_count = 10;
  return s;
}

SignatureSet pair(double m0, double m1) {
  SignatureSet set;
  set.classes = {one_band(0, m0, 1.0, 0.5), one_band(1, m1, 1.0, 0.5)};
  set.legend = {{0, "a"}, {1, "b"}};
  return set;
}

}  // namespace

TEST_CASE("signature estimation") {
  const auto img = stack_bands({grid(1, 4, {1, 3, 10, 10})}, {"b"});
  const LandCoverMap train(grid(1, 4, {1, 1, 2, 2}), {{1, "x"}, {2, "const"}});
  const auto sig = estimate_signatures(img, train);
  REQUIRE(sig.classes.size() == 2);
  CHECK(sig.classes[0].mean[0] == 2.0);
  const double var = 2.0;
  CHECK(sig.classes[0].covariance(0, 0) == var + 1e-6 * var);
  CHECK(sig.classes[0].prior == 0.5);
  // Constant samples: zero trace, the floor alone keeps the matrix invertible.
  CHECK(sig.classes[1].covariance(0, 0) == kCovarianceRegularization);

  const LandCoverMap thin(grid(1, 4, {1, 1, 1, 2}), {{1, "x"}, {2, "lonely"}});
  try {
    estimate_signatures(img, thin);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("lonely") != std::string::npos);
  }
}

TEST_CASE("maxlike decisions") {
  const auto img = stack_bands({grid(1, 3, {0, 5, 2})}, {"b"});
  const auto res = maxlike(img, pair(0, 10), PriorMode::equal);
  CHECK(res.map.class_at(0) == 0);
  CHECK(res.map.class_at(1) == 0);  // equidistant: lower id
  CHECK(res.map.class_at(2) == 0);
  // Scores by hand: -0.5 (x - m)^2 + ln 0.5.
  CHECK(res.scores.grids[0][2] == doctest::Approx(std::log(0.5) - 2.0).epsilon(1e-14));
  CHECK(res.scores.grids[1][2] == doctest::Approx(std::log(0.5) - 32.0).epsilon(1e-14));
  const auto at_mean = maxlike(stack_bands({grid(1, 1, {10})}, {"b"}), pair(0, 10));
  CHECK(at_mean.map.class_at(0) == 1);
  const auto nd = maxlike(stack_bands({grid(1, 1, {kDefaultNodata})}, {"b"}), pair(0, 10));
  CHECK_FALSE(nd.map.is_valid(0));
}

TEST_CASE("maxlike on separated gaussians") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 256;
  std::vector<double> band(n * n), truth(n * n);
  for (int i = 0; i < n * n; ++i) {
    truth[i] = (i / n) < n / 2 ? 1 : 2;
    band[i] = (truth[i] == 1 ? 0.0 : 8.0) + z(rng);
  }
  const auto img = stack_bands({grid(n, n, band)}, {"b"});
  const LandCoverMap ref(grid(n, n, truth), {{1, "a"}, {2, "b"}});
  const auto res = maxlike(img, estimate_signatures(img, ref));
  const auto cm = confusion(res.map, ref);
  CHECK(overall_accuracy(cm) > 0.99);
  CHECK(kappa(cm) > 0.9);
}

TEST_CASE("icm behaviour") {
  // 3x3: centre labelled 2 with a small score advantage, neighbours 1.
  std::vector<double> s1(9, 0.0), s2(9, -5.0);
  s2[4] = 1.0;
  const ClassScores scores{{1, 2}, {grid(3, 3, s1), grid(3, 3, s2)}};
  std::vector<double> labels(9, 1);
  labels[4] = 2;
  const LandCoverMap init(grid(3, 3, labels), testutil::legend(2));

  const double beta = 0.5;  // gap 1 < 8 * beta
  // Objective with the centre as 2 versus as 1, by hand: 8 neighbours of the centre and
  // 12 remaining same-label pairs among the ring.
  const double keep = 1.0 + 12 * beta;
  const double flip = 0.0 + 20 * beta;
  CHECK(flip > keep);
  CHECK(static_cast<double>(icm_objective(init, scores, beta)) == keep);
  const auto r = icm(init, scores, {beta, 10});
  CHECK(r.map.class_at(4) == 1);
  CHECK(static_cast<double>(r.objective.back()) == flip);

  const auto zero = icm(init, scores, {0.0, 10});
  CHECK(zero.map == init);
  const auto again = icm(r.map, scores, {beta, 10});
  CHECK(again.sweeps == 1);
  CHECK(again.map == r.map);
  CHECK_THROWS_AS(icm(init, scores, {-1.0, 10}), DataError);
  CHECK_THROWS_AS(icm(init, scores, {1.0, 0}), DataError);
}

TEST_CASE("icm objective never decreases") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    const int rows = 20, cols = 23, nc = 3;
    std::vector<Grid> grids;
    for (int k = 0; k < nc; ++k) grids.push_back(testutil::random_grid(rng, rows, cols, -4, 0));
    std::vector<double> labels(rows * cols);
    std::uniform_int_distribution<int> cls(1, nc);
    for (auto& l : labels) l = cls(rng);
    const ClassScores scores{{1, 2, 3}, grids};
    const auto r = icm(LandCoverMap(grid(rows, cols, labels), testutil::legend(nc)), scores,
                       {0.5 * (t % 4 + 1), 25});
    for (std::size_t k = 1; k < r.objective.size(); ++k) CHECK(r.objective[k] >= r.objective[k - 1]);
  }
}

TEST_CASE("confusion and kappa") {
  const LandCoverMap ref = testutil::map(1, 4, {1, 1, 2, 2}, 2);
  const LandCoverMap pred = testutil::map(1, 4, {1, 2, 2, 2}, 2);
  const auto cm = confusion(pred, ref);
  CHECK(cm.counts == std::vector<std::int64_t>{1, 1, 0, 2});
  CHECK(confusion(ref, ref).counts == std::vector<std::int64_t>{2, 0, 0, 2});
  const LandCoverMap empty = testutil::map(1, 4, std::vector<double>(4, kDefaultNodata), 2);
  CHECK_THROWS_AS(confusion(empty, ref), DataError);

  auto k = [](std::vector<std::int64_t> c) { return kappa(ConfusionMatrix{{1, 2}, std::move(c)}); };
  CHECK(k({2, 0, 0, 2}) == 1.0);
  CHECK(k({1, 1, 1, 1}) == 0.0);
  CHECK(k({0, 2, 2, 0}) == -1.0);
  CHECK_THROWS_AS(k({4, 0, 0, 0}), NumericalError);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> u(0, 50);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::int64_t> c(9);
    for (auto& x : c) x = u(rng);
    const double v = kappa(ConfusionMatrix{{1, 2, 3}, c});
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(kappa(ConfusionMatrix{{1, 2, 3}, {5, 0, 0, 0, 7, 0, 0, 0, 0}}) == 1.0);
}

TEST_CASE("residual map") {
  const LandCoverMap a = testutil::map(1, 3, {1, 2, kDefaultNodata}, 2);
  const LandCoverMap b = testutil::map(1, 3, {2, 1, 1}, 2);
  CHECK(residual_map(a, a).disagreement.count() == 0);
  const auto r = residual_map(a, b);
  CHECK(r.disagreement.count() == 2);
  CHECK_FALSE(r.disagreement[2]);
  CHECK(r.producer_accuracy.at(1) == 0.0);
}

TEST_CASE("signature csv round trip") {
  const auto dir = testutil::scratch("signatures");
  std::mt19937_64 rng(9);
  const auto b1 = testutil::random_grid(rng, 6, 6, 0, 100), b2 = testutil::random_grid(rng, 6, 6, 0, 100);
  std::vector<double> labels(36);
  for (int i = 0; i < 36; ++i) labels[i] = i % 2 + 1;
  const auto sig = estimate_signatures(stack_bands({b1, b2}, {"a", "b"}),
                                       testutil::map(6, 6, labels, 2));
  write_text_file(dir / "s.csv", format_signatures_csv(sig));
  const auto back = read_signatures_csv(dir / "s.csv", sig.legend);
  REQUIRE(back.classes.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back.classes[k].mean == sig.classes[k].mean);
    CHECK(back.classes[k].covariance == sig.classes[k].covariance);
    CHECK(back.classes[k].prior == sig.classes[k].prior);
  }
}
