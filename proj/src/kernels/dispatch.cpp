#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lcm/kernels.hpp"

namespace lcm::kernels {

namespace {

Isa detect_best() noexcept {
  if (const char* forced = std::getenv("LCM_ISA"); forced && std::string(forced) == "scalar") {
    return Isa::scalar;
  }
#if defined(LCM_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa& current() noexcept {
  static Isa isa = detect_best();
  return isa;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": span length mismatch");
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LCM_HAVE_AVX2)
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel ISA " + std::string(isa_name(isa)) + " not available");
  }
#if defined(LCM_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

const KernelTable& active() { return table(current()); }

Isa active_isa() noexcept { return current(); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel ISA " + std::string(isa_name(isa)) + " not available");
  }
  current() = isa;
}

void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out, double nodata_a, double nodata_b,
                           double out_nodata) {
  check_sizes(a.size(), b.size(), "normalized_difference");
  check_sizes(a.size(), out.size(), "normalized_difference");
  active().normalized_difference(a.data(), b.data(), out.data(), a.size(), nodata_a, nodata_b,
                                 out_nodata);
}

void weighted_pair(std::span<const double> a, std::span<const double> b, std::span<double> out,
                   double wa, double wb, double nodata_a, double nodata_b, double out_nodata) {
  check_sizes(a.size(), b.size(), "weighted_pair");
  check_sizes(a.size(), out.size(), "weighted_pair");
  active().weighted_pair(a.data(), b.data(), out.data(), a.size(), wa, wb, nodata_a, nodata_b,
                         out_nodata);
}

void subtract_clamp(std::span<const double> in, std::span<double> out, double offset,
                    double nodata) {
  check_sizes(in.size(), out.size(), "subtract_clamp");
  active().subtract_clamp(in.data(), out.data(), in.size(), offset, nodata);
}

void weighted_sum(std::span<const double* const> factors, std::span<const double> weights,
                  std::span<const double> nodata, std::span<double> out, double out_nodata) {
  check_sizes(factors.size(), weights.size(), "weighted_sum");
  check_sizes(factors.size(), nodata.size(), "weighted_sum");
  active().weighted_sum(factors.data(), weights.data(), nodata.data(), factors.size(), out.data(),
                        out.size(), out_nodata);
}

double lane_sum(std::span<const double> x) { return active().lane_sum(x.data(), x.size()); }

double lane_dot(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size(), "lane_dot");
  return active().lane_dot(x.data(), y.data(), x.size());
}

}  // namespace lcm::kernels
