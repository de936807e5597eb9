#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lcm/grid.hpp"

namespace lcm {

struct BandStats {
  std::vector<std::string> labels;
  std::vector<double> mean;
  std::vector<double> std_dev;  // population form
  // Row-major n x n Pearson coefficients; empty optional where a band has zero variance.
  std::vector<std::optional<double>> correlation;

  std::size_t band_count() const noexcept { return mean.size(); }
  std::optional<double> corr(std::size_t i, std::size_t j) const {
    return correlation[i * band_count() + j];
  }
};

struct OifEntry {
  std::array<std::size_t, 3> bands;
  double oif = 0.0;
};

// Sorted by descending score, ties by lexicographic band triple.
using OifRanking = std::vector<OifEntry>;

inline constexpr double kOifDenominatorFloor = 1e-9;

// Per-band nearest-rank percentile of the values selected by `reference`
// (percentile 0 is the minimum).
std::vector<double> dark_object_values(const MultiBandImage& image, const BinaryMask& reference,
                                       double percentile = 0.0);

// v -> max(v - dark[b], 0) for every valid pixel of band b.
MultiBandImage dos_correct(const MultiBandImage& image, const std::vector<double>& dark);

BandStats band_statistics(const MultiBandImage& image, const BinaryMask* mask = nullptr);

// Optimum Index Factor of every 3-combination of `bands`:
// (s_i + s_j + s_k) / max(|r_ij| + |r_ik| + |r_jk|, 1e-9), undefined correlations counting 0.
OifRanking oif_rank(const BandStats& stats, const std::vector<std::size_t>& bands);
double oif_score(const BandStats& stats, std::size_t i, std::size_t j, std::size_t k);

enum class MaskCombine { union_, intersection };

BinaryMask combine_masks(const std::vector<BinaryMask>& masks, MaskCombine mode);

std::string format_band_stats_csv(const BandStats& stats);
std::string format_correlation_csv(const BandStats& stats);
std::string format_oif_csv(const OifRanking& ranking);
std::string format_dark_values_csv(const MultiBandImage& image, const std::vector<double>& dark);

}  // namespace lcm
