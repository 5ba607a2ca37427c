#pragma once

#include <stdexcept>
#include <vector>

namespace spectral_forge {

enum class PeakMethod { CwtRicker, LocalMaxima };

struct PeakDetectorConfig {
  PeakMethod method = PeakMethod::CwtRicker;

  /// CWT widths; the conventional reading of "width [10, 20]" is the
  /// inclusive integer range, but any strictly increasing list is accepted.
  std::vector<int> cwt_widths = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  int ridge_gap_threshold = 2;          // width levels a ridge may skip
  double ridge_min_length_frac = 0.25;  // of |widths|
  double min_snr = 1.0;
  double noise_percentile = 10.0;       // noise floor of the smallest-width row
  int noise_window = 0;                 // 0 -> ceil(len/20)

  // Local-maxima method
  int lm_width = 10;  // minimum width (grid steps) at half prominence

  void validate() const;
};

/// Ricker (mexican hat) wavelet response of `row` at each width, one row per
/// width, computed by direct "same"-mode convolution. Exposed for the tests'
/// independent cross-checks.
std::vector<std::vector<double>> cwt_ricker(const std::vector<double>& row,
                                            const std::vector<int>& widths);

/// Wavelet peak detection: ridge lines are linked across adjacent widths,
/// kept if long enough and if max |response| along the ridge clears the
/// noise floor of the smallest-width transform. Returns strictly increasing
/// indices (the ridges' smallest-width endpoints).
std::vector<int> detect_peaks_cwt(const std::vector<double>& row,
                                  const PeakDetectorConfig& cfg);

/// Intensity-based local maxima with prominence >= max(row)/len(row) and
/// width at half prominence >= lm_width.
std::vector<int> detect_peaks_local(const std::vector<double>& row,
                                    const PeakDetectorConfig& cfg);

/// 116-dimensional peak-count encoding (12-grid-step bins over 1392 points).
struct PeakFeatureVector {
  std::vector<int> counts;
  int bin_width = 12;

  std::vector<double> as_doubles() const {
    return std::vector<double>(counts.begin(), counts.end());
  }
};

/// counts[i] = |{p : floor(p / bin_width) == i}| over signal_len / bin_width
/// bins; peak indices must lie in [0, signal_len).
PeakFeatureVector featurize(const std::vector<int>& peaks, int bin_width = 12,
                            int signal_len = 1392);

}  // namespace spectral_forge
