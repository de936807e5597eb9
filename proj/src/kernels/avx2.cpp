#include <immintrin.h>

#include "lcm/kernels.hpp"

// Compiled with -mavx2 only (no FMA): every product is rounded before it is added,
// exactly as in the scalar reference.
namespace lcm::kernels::avx2 {

namespace {

void normalized_difference(const double* a, const double* b, double* out, std::size_t n,
                           double nodata_a, double nodata_b, double out_nodata) {
  const __m256d na = _mm256_set1_pd(nodata_a);
  const __m256d nb = _mm256_set1_pd(nodata_b);
  const __m256d fill = _mm256_set1_pd(out_nodata);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d sum = _mm256_add_pd(va, vb);
    const __m256d diff = _mm256_sub_pd(va, vb);
    const __m256d q = _mm256_div_pd(diff, sum);
    __m256d missing = _mm256_cmp_pd(va, na, _CMP_EQ_OQ);
    missing = _mm256_or_pd(missing, _mm256_cmp_pd(vb, nb, _CMP_EQ_OQ));
    missing = _mm256_or_pd(missing, _mm256_cmp_pd(sum, zero, _CMP_EQ_OQ));
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(q, fill, missing));
  }
  scalar::kTable.normalized_difference(a + i, b + i, out + i, n - i, nodata_a, nodata_b,
                                       out_nodata);
}

void weighted_pair(const double* a, const double* b, double* out, std::size_t n, double wa,
                   double wb, double nodata_a, double nodata_b, double out_nodata) {
  const __m256d vwa = _mm256_set1_pd(wa);
  const __m256d vwb = _mm256_set1_pd(wb);
  const __m256d na = _mm256_set1_pd(nodata_a);
  const __m256d nb = _mm256_set1_pd(nodata_b);
  const __m256d fill = _mm256_set1_pd(out_nodata);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d pa = _mm256_mul_pd(vwa, va);
    const __m256d pb = _mm256_mul_pd(vwb, vb);
    const __m256d missing =
        _mm256_or_pd(_mm256_cmp_pd(va, na, _CMP_EQ_OQ), _mm256_cmp_pd(vb, nb, _CMP_EQ_OQ));
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_add_pd(pa, pb), fill, missing));
  }
  scalar::kTable.weighted_pair(a + i, b + i, out + i, n - i, wa, wb, nodata_a, nodata_b,
                               out_nodata);
}

void subtract_clamp(const double* in, double* out, std::size_t n, double offset, double nodata) {
  const __m256d off = _mm256_set1_pd(offset);
  const __m256d nd = _mm256_set1_pd(nodata);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(in + i);
    const __m256d d = _mm256_sub_pd(v, off);
    // d > 0 ? d : 0, matching the scalar select for signed zeros and NaN.
    const __m256d pos = _mm256_and_pd(d, _mm256_cmp_pd(d, zero, _CMP_GT_OQ));
    const __m256d missing = _mm256_cmp_pd(v, nd, _CMP_EQ_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(pos, nd, missing));
  }
  scalar::kTable.subtract_clamp(in + i, out + i, n - i, offset, nodata);
}

void weighted_sum(const double* const* factors, const double* weights, const double* nodata,
                  std::size_t n_factors, double* out, std::size_t n, double out_nodata) {
  const __m256d fill = _mm256_set1_pd(out_nodata);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    __m256d missing = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n_factors; ++k) {
      const __m256d v = _mm256_loadu_pd(factors[k] + i);
      const __m256d term = _mm256_mul_pd(_mm256_set1_pd(weights[k]), v);
      acc = _mm256_add_pd(acc, term);
      missing = _mm256_or_pd(missing, _mm256_cmp_pd(v, _mm256_set1_pd(nodata[k]), _CMP_EQ_OQ));
    }
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(acc, fill, missing));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    bool missing_one = false;
    for (std::size_t k = 0; k < n_factors; ++k) {
      const double v = factors[k][i];
      const double term = weights[k] * v;
      acc = acc + term;
      missing_one = missing_one || v == nodata[k];
    }
    out[i] = missing_one ? out_nodata : acc;
  }
}

double lane_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t k = 0; i < n; ++i, ++k) s[k] += x[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double lane_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, p);
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double p = x[i] * y[i];
    s[k] += p;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace

const KernelTable kTable = {
    normalized_difference, weighted_pair, subtract_clamp, weighted_sum, lane_sum, lane_dot,
};

}  // namespace lcm::kernels::avx2
