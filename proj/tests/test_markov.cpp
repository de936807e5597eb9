#include <doctest.h>

#include <numeric>
#include <random>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/markov.hpp"
#include "test_util.hpp"

using namespace lcm;
using testutil::map;

namespace {

TransitionMatrix matrix(std::vector<double> p, double span = 1.0) {
  TransitionMatrix tm;
  const auto n = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(p.size()))));
  for (std::size_t i = 0; i < n; ++i) tm.class_ids.push_back(static_cast<int>(i) + 1);
  tm.probs = std::move(p);
  tm.time_span = span;
  return tm;
}

void check_rows(const TransitionMatrix& tm) {
  for (std::size_t i = 0; i < tm.order(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < tm.order(); ++j) {
      CHECK(tm.at(i, j) >= 0.0);
      CHECK(tm.at(i, j) <= 1.0);
      s += tm.at(i, j);
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

}  // namespace

TEST_CASE("crosstab") {
  const auto a = map(1, 4, {1, 1, 2, 2}, 2);
  const auto b = map(1, 4, {1, 2, 2, 2}, 2);
  const CountMatrix c = crosstab(a, b);
  CHECK(c.counts == std::vector<std::int64_t>{1, 1, 0, 2});
  CHECK(crosstab(a, a).counts == std::vector<std::int64_t>{2, 0, 0, 2});
  const auto left = map(1, 2, {1, kDefaultNodata}, 2);
  const auto right = map(1, 2, {kDefaultNodata, 2}, 2);
  CHECK_THROWS_AS(crosstab(left, right), DataError);
  CHECK_THROWS(crosstab(a, map(1, 4, {1, 1, 1, 1}, 3)));
  CHECK_THROWS(crosstab(a, map(2, 2, {1, 1, 1, 1}, 2)));
  const BinaryMask half(testutil::geometry(1, 4), {1, 1, 0, 0});
  CHECK(crosstab(a, b, &half).counts == std::vector<std::int64_t>{1, 1, 0, 0});
}

TEST_CASE("transition probabilities") {
  const CountMatrix c{{1, 2}, {8, 2, 1, 9}};
  const TransitionMatrix tm = transition_probabilities(c, 4.0);
  CHECK(tm.probs == std::vector<double>{0.8, 0.2, 0.1, 0.9});
  CHECK(tm.counts == c.counts);
  CHECK(tm.time_span == 4.0);
  const TransitionMatrix empty_row = transition_probabilities({{1, 2, 3}, {3, 1, 0, 0, 0, 0, 1, 1, 2}}, 1.0);
  CHECK(empty_row.at(1, 0) == 0.0);
  CHECK(empty_row.at(1, 1) == 1.0);
  check_rows(empty_row);
  CHECK_THROWS(transition_probabilities({{1, 2}, {1, -1, 0, 1}}, 1.0));
}

TEST_CASE("time span scaling") {
  const TransitionMatrix tm = matrix({0.9, 0.1, 0.2, 0.8}, 8.0);
  const TransitionMatrix half = scale_transition(tm, 4.0);
  CHECK(half.at(0, 0) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(half.at(0, 1) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(half.at(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(half.at(1, 1) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(half.time_span == 4.0);
  CHECK(scale_transition(tm, 8.0).probs == tm.probs);
  const TransitionMatrix id = matrix({1, 0, 0, 1}, 3.0);
  CHECK(scale_transition(id, 17.0).probs == id.probs);
  CHECK_THROWS_AS(scale_transition(matrix({0.4, 0.6, 0, 1}, 1.0), 2.0), NumericalError);
  CHECK_THROWS(scale_transition(tm, 0.0));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> p(9);
    for (std::size_t i = 0; i < 3; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 3; ++j) s += p[i * 3 + j] = u(rng);
      for (std::size_t j = 0; j < 3; ++j) p[i * 3 + j] /= s;
    }
    const TransitionMatrix m = matrix(p, 10.0);
    check_rows(scale_transition(m, 2.5));
    check_rows(scale_transition(m, 10.0));
  }
}

TEST_CASE("estimated matrix recovers simulated transitions") {
  const std::vector<std::vector<double>> truth{{0.9, 0.1, 0.05, 0.95},
                                               {0.8, 0.15, 0.05, 0.1, 0.85, 0.05, 0.02, 0.08, 0.9}};
  for (const auto& p : truth) {
    const int n = p.size() == 4 ? 2 : 3;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> start(1, n);
      std::vector<double> a(10000), b(10000);
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = start(rng);
        const auto row = static_cast<std::size_t>(a[i] - 1) * n;
        std::discrete_distribution<int> next(p.begin() + static_cast<std::ptrdiff_t>(row),
                                             p.begin() + static_cast<std::ptrdiff_t>(row) + n);
        b[i] = next(rng) + 1;
      }
      const TransitionMatrix tm =
          transition_probabilities(crosstab(map(100, 100, a, n), map(100, 100, b, n)), 1.0);
      check_rows(tm);
      for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(tm.probs[k] - p[k]) <= 0.02);
    }
  }
}

TEST_CASE("second order transitions") {
  const auto a = map(1, 3, {1, 1, 1}, 2);
  const auto b = map(1, 3, {2, 2, 2}, 2);
  const SecondOrderTable t = second_order_transitions(a, b, a);
  CHECK(t.at(0, 1, 0) == 1.0);
  CHECK(t.at(0, 1, 1) == 0.0);
  CHECK_FALSE(t.is_fallback(0, 1));
  CHECK(t.is_fallback(1, 0));
  CHECK(t.support[1] == 3);
  const SecondOrderTable s = second_order_transitions(a, a, a);
  CHECK(s.at(0, 0, 0) == 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double sum = 0;
      for (std::size_t k = 0; k < 2; ++k) sum += t.at(i, j, k);
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  CHECK_THROWS(second_order_transitions(a, b, map(3, 1, {1, 1, 1}, 2)));
}

TEST_CASE("conditional probability maps") {
  const auto cur = map(1, 3, {1, 2, kDefaultNodata}, 2);
  const auto maps = conditional_probability_maps(cur, matrix({0.8, 0.2, 0.3, 0.7}));
  REQUIRE(maps.size() == 2);
  CHECK(maps[0][0] == 0.8);
  CHECK(maps[1][0] == 0.2);
  CHECK(maps[0][1] == 0.3);
  CHECK_FALSE(maps[0].is_valid(2));
  CHECK_FALSE(maps[1].is_valid(2));
  const auto id = conditional_probability_maps(cur, matrix({1, 0, 0, 1}));
  CHECK(id[0][0] == 1.0);
  CHECK(id[1][1] == 1.0);
  CHECK_THROWS(conditional_probability_maps(map(1, 1, {3}, 3), matrix({1, 0, 0, 1})));

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cls(1, 3);
  std::vector<double> v(64), w(64);
  for (auto& x : v) x = cls(rng);
  for (auto& x : w) x = cls(rng);
  const auto prev = map(8, 8, v, 3), now = map(8, 8, w, 3);
  const SecondOrderTable table = second_order_transitions(prev, now, prev);
  const auto so = conditional_probability_maps(prev, now, table);
  for (std::size_t i = 0; i < 64; ++i) {
    double s = 0;
    for (const auto& g : so) s += g[i];
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("expected areas") {
  std::vector<double> all_a(100, 1.0);
  const ExpectedAreas e = expected_areas(map(10, 10, all_a, 2), matrix({0.8, 0.2, 0, 1}));
  CHECK(e.expected[0] == doctest::Approx(80.0));
  CHECK(e.allocated == std::vector<std::int64_t>{80, 20});
  const auto m = map(1, 3, {1, 2, 2}, 2);
  CHECK(expected_areas(m, matrix({1, 0, 0, 1})).allocated == std::vector<std::int64_t>{1, 2});
  const ExpectedAreas three = expected_areas(map(1, 3, {1, 1, 1}, 2), matrix({0.5, 0.5, 0, 1}));
  CHECK(three.allocated == std::vector<std::int64_t>{2, 1});
}

TEST_CASE("largest remainder") {
  const std::vector<double> v{1.5, 1.5};
  CHECK(largest_remainder(v, 3) == std::vector<std::int64_t>{2, 1});
  const std::vector<double> w{0.2, 0.7, 2.1};
  CHECK(largest_remainder(w, 3) == std::vector<std::int64_t>{0, 1, 2});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 50);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(6);
    for (auto& e : x) e = u(rng);
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    const auto total = static_cast<std::int64_t>(std::llround(s));
    const auto r = largest_remainder(x, total);
    CHECK(std::accumulate(r.begin(), r.end(), std::int64_t{0}) == total);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(static_cast<double>(r[k]) - x[k]) < 1.0);
  }
}

TEST_CASE("transition csv round trip") {
  const auto dir = testutil::scratch("markov_csv");
  const TransitionMatrix tm = matrix({0.8, 0.2, 1.0 / 3, 2.0 / 3}, 8.0);
  write_text_file(dir / "tm.csv", format_transition_csv(tm));
  const TransitionMatrix back = read_transition_csv(dir / "tm.csv");
  CHECK(back.class_ids == tm.class_ids);
  CHECK(back.probs == tm.probs);
  CHECK(back.time_span == 8.0);
  write_text_file(dir / "bad.csv", "# time_span=1\nfrom,1,2\n1,0.5,0.4\n2,0,1\n");
  CHECK_THROWS(read_transition_csv(dir / "bad.csv"));
}
