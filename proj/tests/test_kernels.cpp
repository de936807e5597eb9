#include <doctest.h>

#include <bit>
#include <random>

#include "lcm/kernels.hpp"

using namespace lcm::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

std::vector<double> values(std::mt19937_64& rng, std::size_t n, double nodata, double share) {
  std::uniform_real_distribution<double> u(-500.0, 500.0), p(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = p(rng) < share ? nodata : u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels are always available") {
  CHECK(isa_available(Isa::scalar));
  CHECK(isa_name(Isa::scalar) == "scalar");
}

TEST_CASE("every available ISA matches the scalar reference bit for bit") {
  const KernelTable& ref = table(Isa::scalar);
  for (Isa isa : {Isa::avx2}) {
    if (!isa_available(isa)) {
      MESSAGE("skipping unavailable ISA ", isa_name(isa));
      continue;
    }
    const KernelTable& k = table(isa);
    std::mt19937_64 rng(42);
    const double nd = -9999.0;
    // Odd lengths exercise the scalar tails.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 1001u}) {
      CAPTURE(n);
      const auto a = values(rng, n, nd, 0.1), b = values(rng, n, nd, 0.1);
      std::vector<double> o1(n), o2(n);

      k.normalized_difference(a.data(), b.data(), o1.data(), n, nd, nd, nd);
      ref.normalized_difference(a.data(), b.data(), o2.data(), n, nd, nd, nd);
      CHECK(same_bits(o1, o2));

      k.weighted_pair(a.data(), b.data(), o1.data(), n, 0.3, 0.7, nd, nd, nd);
      ref.weighted_pair(a.data(), b.data(), o2.data(), n, 0.3, 0.7, nd, nd, nd);
      CHECK(same_bits(o1, o2));

      k.subtract_clamp(a.data(), o1.data(), n, 12.5, nd);
      ref.subtract_clamp(a.data(), o2.data(), n, 12.5, nd);
      CHECK(same_bits(o1, o2));

      const auto c = values(rng, n, nd, 0.0);
      const double* f[3] = {a.data(), b.data(), c.data()};
      const double w[3] = {0.2, 0.5, 0.3};
      const double nds[3] = {nd, nd, nd};
      k.weighted_sum(f, w, nds, 3, o1.data(), n, nd);
      ref.weighted_sum(f, w, nds, 3, o2.data(), n, nd);
      CHECK(same_bits(o1, o2));

      const auto x = values(rng, n, nd, 0.0), y = values(rng, n, nd, 0.0);
      CHECK(std::bit_cast<std::uint64_t>(k.lane_sum(x.data(), n)) ==
            std::bit_cast<std::uint64_t>(ref.lane_sum(x.data(), n)));
      CHECK(std::bit_cast<std::uint64_t>(k.lane_dot(x.data(), y.data(), n)) ==
            std::bit_cast<std::uint64_t>(ref.lane_dot(x.data(), y.data(), n)));
    }
  }
}

TEST_CASE("forcing the scalar path") {
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  CHECK(&active() == &table(Isa::scalar));
  set_active_isa(before);
}
