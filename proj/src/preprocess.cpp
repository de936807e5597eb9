#include "lcm/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/kernels.hpp"

namespace lcm {

namespace {

// Nearest-rank percentile of an unsorted sample.
double nearest_rank(std::vector<double> values, double percentile) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

}  // namespace

std::vector<double> dark_object_values(const MultiBandImage& image, const BinaryMask& reference,
                                       double percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw DataError("dark object percentile must lie in [0, 100]");
  }
  require_same_frame(image.geometry(), reference.geometry(), "dark-object reference mask");
  std::vector<double> dark;
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const Grid& band = image.band(b);
    std::vector<double> sample;
    for (std::size_t i = 0; i < band.size(); ++i) {
      if (reference[i] && band.is_valid(i)) sample.push_back(band[i]);
    }
    if (sample.empty()) {
      throw DataError("dark object reference selects no valid pixel in band '" +
                      image.labels()[b] + "'");
    }
    dark.push_back(nearest_rank(std::move(sample), percentile));
  }
  return dark;
}

MultiBandImage dos_correct(const MultiBandImage& image, const std::vector<double>& dark) {
  if (dark.size() != image.band_count()) {
    throw DataError("dos_correct: " + std::to_string(dark.size()) + " dark values for " +
                    std::to_string(image.band_count()) + " bands");
  }
  std::vector<Grid> out;
  for (std::size_t b = 0; b < image.band_count(); ++b) {
    const Grid& band = image.band(b);
    std::vector<double> values(band.size());
    kernels::subtract_clamp(band.values(), values, dark[b], band.nodata());
    out.emplace_back(band.geometry(), std::move(values));
  }
  return stack_bands(std::move(out), image.labels());
}

BandStats band_statistics(const MultiBandImage& image, const BinaryMask* mask) {
  if (mask) require_same_frame(image.geometry(), mask->geometry(), "statistics mask");
  const std::size_t nb = image.band_count();
  const std::size_t npix = image.geometry().size();
  auto selected = [&](std::size_t b, std::size_t i) {
    return (!mask || (*mask)[i]) && image.band(b).is_valid(i);
  };

  BandStats stats;
  stats.labels = image.labels();
  stats.mean.resize(nb);
  stats.std_dev.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < npix; ++i) {
      if (selected(b, i)) xs.push_back(image.band(b)[i]);
    }
    if (xs.size() < 2) {
      throw DataError("band '" + image.labels()[b] + "' has fewer than 2 valid pixels");
    }
    const double n = static_cast<double>(xs.size());
    const double mean = kernels::lane_sum(xs) / n;
    for (double& x : xs) x -= mean;
    stats.mean[b] = mean;
    stats.std_dev[b] = std::sqrt(kernels::lane_dot(xs, xs) / n);
  }

  stats.correlation.assign(nb * nb, std::nullopt);
  for (std::size_t i = 0; i < nb; ++i) {
    stats.correlation[i * nb + i] = 1.0;
    for (std::size_t j = i + 1; j < nb; ++j) {
      std::vector<double> xs, ys;
      for (std::size_t p = 0; p < npix; ++p) {
        if (selected(i, p) && selected(j, p)) {
          xs.push_back(image.band(i)[p]);
          ys.push_back(image.band(j)[p]);
        }
      }
      if (xs.size() < 2) {
        throw DataError("bands '" + image.labels()[i] + "' and '" + image.labels()[j] +
                        "' share fewer than 2 co-valid pixels");
      }
      const double n = static_cast<double>(xs.size());
      const double mx = kernels::lane_sum(xs) / n;
      const double my = kernels::lane_sum(ys) / n;
      for (double& x : xs) x -= mx;
      for (double& y : ys) y -= my;
      const double sxx = kernels::lane_dot(xs, xs);
      const double syy = kernels::lane_dot(ys, ys);
      const double sxy = kernels::lane_dot(xs, ys);
      std::optional<double> r;
      if (sxx > 0.0 && syy > 0.0) r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
      stats.correlation[i * nb + j] = r;
      stats.correlation[j * nb + i] = r;
    }
  }
  return stats;
}

double oif_score(const BandStats& stats, std::size_t i, std::size_t j, std::size_t k) {
  const auto abs_corr = [&](std::size_t a, std::size_t b) {
    const auto r = stats.corr(a, b);
    return r ? std::abs(*r) : 0.0;
  };
  const double spread = stats.std_dev[i] + stats.std_dev[j] + stats.std_dev[k];
  const double redundancy = abs_corr(i, j) + abs_corr(i, k) + abs_corr(j, k);
  return spread / std::max(redundancy, kOifDenominatorFloor);
}

OifRanking oif_rank(const BandStats& stats, const std::vector<std::size_t>& bands) {
  std::vector<std::size_t> eligible = bands;
  std::sort(eligible.begin(), eligible.end());
  eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());
  if (eligible.size() < 3) throw DataError("OIF ranking needs at least 3 eligible bands");
  for (std::size_t b : eligible) {
    if (b >= stats.band_count()) {
      throw DataError("OIF band index " + std::to_string(b) + " out of range");
    }
  }
  OifRanking ranking;
  for (std::size_t a = 0; a < eligible.size(); ++a) {
    for (std::size_t b = a + 1; b < eligible.size(); ++b) {
      for (std::size_t c = b + 1; c < eligible.size(); ++c) {
        const std::array<std::size_t, 3> t = {eligible[a], eligible[b], eligible[c]};
        ranking.push_back({t, oif_score(stats, t[0], t[1], t[2])});
      }
    }
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const OifEntry& x, const OifEntry& y) {
    if (x.oif != y.oif) return x.oif > y.oif;
    return x.bands < y.bands;
  });
  return ranking;
}

BinaryMask combine_masks(const std::vector<BinaryMask>& masks, MaskCombine mode) {
  if (masks.empty()) throw DataError("combine_masks: no masks given");
  std::vector<std::uint8_t> out(masks.front().values().begin(), masks.front().values().end());
  for (std::size_t m = 1; m < masks.size(); ++m) {
    require_same_frame(masks.front().geometry(), masks[m].geometry(),
                       "mask " + std::to_string(m) + " vs mask 0");
    const auto v = masks[m].values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = mode == MaskCombine::union_ ? (out[i] | v[i]) : (out[i] & v[i]);
    }
  }
  return BinaryMask(masks.front().geometry(), std::move(out));
}

std::string format_band_stats_csv(const BandStats& stats) {
  std::string out = "band_label,mean,std_dev\n";
  for (std::size_t b = 0; b < stats.band_count(); ++b) {
    out += stats.labels[b] + "," + format_number(stats.mean[b]) + "," +
           format_number(stats.std_dev[b]) + "\n";
  }
  return out;
}

std::string format_correlation_csv(const BandStats& stats) {
  const std::size_t n = stats.band_count();
  std::string out = "band";
  for (const auto& l : stats.labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += stats.labels[i];
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = stats.corr(i, j);
      out += "," + (r ? format_number(*r) : std::string("undefined"));
    }
    out += "\n";
  }
  return out;
}

std::string format_oif_csv(const OifRanking& ranking) {
  std::string out = "b1,b2,b3,oif\n";
  for (const auto& e : ranking) {
    out += std::to_string(e.bands[0]) + "," + std::to_string(e.bands[1]) + "," +
           std::to_string(e.bands[2]) + "," + format_number(e.oif) + "\n";
  }
  return out;
}

std::string format_dark_values_csv(const MultiBandImage& image, const std::vector<double>& dark) {
  std::string out = "band_label,dark_value\n";
  for (std::size_t b = 0; b < dark.size(); ++b) {
    out += image.labels()[b] + "," + format_number(dark[b]) + "\n";
  }
  return out;
}

}  // namespace lcm
