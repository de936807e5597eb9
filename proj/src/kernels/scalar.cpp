#include "lcm/kernels.hpp"

namespace lcm::kernels::scalar {

namespace {

void normalized_difference(const double* a, const double* b, double* out, std::size_t n,
                           double nodata_a, double nodata_b, double out_nodata) {
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = a[i] + b[i];
    const double diff = a[i] - b[i];
    const bool missing = a[i] == nodata_a || b[i] == nodata_b || sum == 0.0;
    out[i] = missing ? out_nodata : diff / sum;
  }
}

void weighted_pair(const double* a, const double* b, double* out, std::size_t n, double wa,
                   double wb, double nodata_a, double nodata_b, double out_nodata) {
  for (std::size_t i = 0; i < n; ++i) {
    const double pa = wa * a[i];
    const double pb = wb * b[i];
    out[i] = (a[i] == nodata_a || b[i] == nodata_b) ? out_nodata : pa + pb;
  }
}

void subtract_clamp(const double* in, double* out, std::size_t n, double offset, double nodata) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = in[i] - offset;
    out[i] = in[i] == nodata ? nodata : (d > 0.0 ? d : 0.0);
  }
}

void weighted_sum(const double* const* factors, const double* weights, const double* nodata,
                  std::size_t n_factors, double* out, std::size_t n, double out_nodata) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    bool missing = false;
    for (std::size_t k = 0; k < n_factors; ++k) {
      const double v = factors[k][i];
      const double term = weights[k] * v;
      acc = acc + term;
      missing = missing || v == nodata[k];
    }
    out[i] = missing ? out_nodata : acc;
  }
}

double lane_sum(const double* x, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) s[k] += x[i + k];
  }
  for (std::size_t k = 0; i < n; ++i, ++k) s[k] += x[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double lane_dot(const double* x, const double* y, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double p = x[i + k] * y[i + k];
      s[k] += p;
    }
  }
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

}  // namespace lcm::kernels::scalar
