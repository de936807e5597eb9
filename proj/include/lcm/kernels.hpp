#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Per-pixel arithmetic kernels. Each kernel has a scalar reference implementation
// and, where the CPU allows, a vectorized variant. Variants are required to agree
// with the scalar reference bit-for-bit; the active variant is picked once at
// startup from the CPU features (override with LCM_ISA=scalar).
namespace lcm::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // out = (a - b) / (a + b); nodata when either input is nodata or a + b == 0.
  void (*normalized_difference)(const double* a, const double* b, double* out, std::size_t n,
                                double nodata_a, double nodata_b, double out_nodata);
  // out = wa * a + wb * b; nodata when either input is nodata.
  void (*weighted_pair)(const double* a, const double* b, double* out, std::size_t n, double wa,
                        double wb, double nodata_a, double nodata_b, double out_nodata);
  // out = max(in - offset, 0); nodata passes through.
  void (*subtract_clamp)(const double* in, double* out, std::size_t n, double offset,
                         double nodata);
  // out = sum_k weights[k] * factors[k], accumulated in k order from 0.0;
  // nodata when any factor is nodata.
  void (*weighted_sum)(const double* const* factors, const double* weights,
                       const double* nodata, std::size_t n_factors, double* out, std::size_t n,
                       double out_nodata);
  // Four interleaved partial sums combined as (s0 + s1) + (s2 + s3).
  double (*lane_sum)(const double* x, std::size_t n);
  double (*lane_dot)(const double* x, const double* y, std::size_t n);
};

bool isa_available(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

const KernelTable& table(Isa isa);
const KernelTable& active();
Isa active_isa() noexcept;
// Throws std::invalid_argument if the ISA is not available on this CPU.
void set_active_isa(Isa isa);

// Span front-ends over the active table.
void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out, double nodata_a, double nodata_b,
                           double out_nodata);
void weighted_pair(std::span<const double> a, std::span<const double> b, std::span<double> out,
                   double wa, double wb, double nodata_a, double nodata_b, double out_nodata);
void subtract_clamp(std::span<const double> in, std::span<double> out, double offset,
                    double nodata);
void weighted_sum(std::span<const double* const> factors, std::span<const double> weights,
                  std::span<const double> nodata, std::span<double> out, double out_nodata);
double lane_sum(std::span<const double> x);
double lane_dot(std::span<const double> x, std::span<const double> y);

namespace scalar {
extern const KernelTable kTable;
}
#if defined(LCM_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace lcm::kernels
