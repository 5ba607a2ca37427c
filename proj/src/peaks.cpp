#include "spectral_forge/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace spectral_forge {

void PeakDetectorConfig::validate() const {
  if (cwt_widths.empty()) throw std::invalid_argument("cwt_widths must be nonempty");
  for (size_t i = 0; i < cwt_widths.size(); ++i) {
    if (cwt_widths[i] < 1) throw std::invalid_argument("cwt widths must be >= 1");
    if (i > 0 && cwt_widths[i] <= cwt_widths[i - 1])
      throw std::invalid_argument("cwt widths must be strictly increasing");
  }
  if (lm_width < 1) throw std::invalid_argument("lm_width must be >= 1");
}

namespace {

// Ricker wavelet sampled over `points` positions, centered.
std::vector<double> ricker(int points, double a) {
  std::vector<double> w(static_cast<size_t>(points));
  const double norm = 2.0 / (std::sqrt(3.0 * a) * std::pow(M_PI, 0.25));
  const double center = (points - 1) / 2.0;
  for (int i = 0; i < points; ++i) {
    const double t = i - center;
    const double q = t * t / (a * a);
    w[static_cast<size_t>(i)] = norm * (1.0 - q) * std::exp(-q / 2.0);
  }
  return w;
}

// "Same"-mode convolution; the ricker is symmetric so this is correlation.
std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& k) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(k.size());
  const int c = (m - 1) / 2;
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int t = 0; t < n; ++t) {
    double s = 0;
    const int j0 = std::max(0, c - t);
    const int j1 = std::min(m - 1, n - 1 + c - t);
    for (int j = j0; j <= j1; ++j)
      s += k[static_cast<size_t>(j)] * x[static_cast<size_t>(t + j - c)];
    out[static_cast<size_t>(t)] = s;
  }
  return out;
}

// Interior strict relative maxima (order-1 neighbors).
std::vector<int> relative_maxima(const std::vector<double>& row) {
  std::vector<int> out;
  for (int i = 1; i + 1 < static_cast<int>(row.size()); ++i)
    if (row[static_cast<size_t>(i)] > row[static_cast<size_t>(i - 1)] &&
        row[static_cast<size_t>(i)] > row[static_cast<size_t>(i + 1)])
      out.push_back(i);
  return out;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * (static_cast<double>(v.size()) - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

struct RidgeLine {
  std::vector<int> rows;  // width-level indices, in link order (large -> small)
  std::vector<int> cols;
  int gap = 0;
};

}  // namespace

std::vector<std::vector<double>> cwt_ricker(const std::vector<double>& row,
                                            const std::vector<int>& widths) {
  std::vector<std::vector<double>> out;
  out.reserve(widths.size());
  const int n = static_cast<int>(row.size());
  for (int a : widths) {
    const int points = std::min(10 * a, n);
    out.push_back(convolve_same(row, ricker(points, static_cast<double>(a))));
  }
  return out;
}

std::vector<int> detect_peaks_cwt(const std::vector<double>& row, const PeakDetectorConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(row.size());
  const int nw = static_cast<int>(cfg.cwt_widths.size());
  if (n < 3) return {};

  const auto cwt = cwt_ricker(row, cfg.cwt_widths);

  // Link relative maxima across width levels, largest width first.
  std::vector<RidgeLine> active, finished;
  for (int col : relative_maxima(cwt[static_cast<size_t>(nw - 1)]))
    active.push_back({{nw - 1}, {col}, 0});
  for (int level = nw - 2; level >= 0; --level) {
    const double max_dist = cfg.cwt_widths[static_cast<size_t>(level)] / 4.0;
    for (auto& line : active) ++line.gap;
    for (int col : relative_maxima(cwt[static_cast<size_t>(level)])) {
      RidgeLine* best = nullptr;
      int best_diff = std::numeric_limits<int>::max();
      for (auto& line : active) {
        const int diff = std::abs(col - line.cols.back());
        if (diff < best_diff) {
          best_diff = diff;
          best = &line;
        }
      }
      if (best != nullptr && best_diff <= max_dist) {
        best->rows.push_back(level);
        best->cols.push_back(col);
        best->gap = 0;
      } else {
        active.push_back({{level}, {col}, 0});
      }
    }
    for (size_t i = active.size(); i-- > 0;) {
      if (active[i].gap > cfg.ridge_gap_threshold) {
        finished.push_back(std::move(active[i]));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
  }
  finished.insert(finished.end(), active.begin(), active.end());

  // Noise floor: percentile of |smallest-width response| in a window around
  // the ridge endpoint.
  const int window = cfg.noise_window > 0
                         ? cfg.noise_window
                         : static_cast<int>(std::ceil(static_cast<double>(n) / 20.0));
  const auto& row0 = cwt[0];
  const int min_len = std::max(
      1, static_cast<int>(std::ceil(cfg.ridge_min_length_frac * static_cast<double>(nw))));

  std::set<int> peaks;
  for (const auto& line : finished) {
    if (static_cast<int>(line.rows.size()) < min_len) continue;
    // Endpoint at the smallest width level the ridge reached.
    size_t end = 0;
    for (size_t i = 1; i < line.rows.size(); ++i)
      if (line.rows[i] < line.rows[end]) end = i;
    const int col = line.cols[end];

    double ridge_max = 0;
    for (size_t i = 0; i < line.rows.size(); ++i)
      ridge_max = std::max(ridge_max, std::abs(cwt[static_cast<size_t>(line.rows[i])]
                                                  [static_cast<size_t>(line.cols[i])]));

    const int w0 = std::max(0, col - window / 2);
    const int w1 = std::min(n, col + window / 2 + 1);
    std::vector<double> noise_vals;
    noise_vals.reserve(static_cast<size_t>(w1 - w0));
    for (int i = w0; i < w1; ++i) noise_vals.push_back(std::abs(row0[static_cast<size_t>(i)]));
    const double noise = percentile(noise_vals, cfg.noise_percentile);

    const bool keep = noise > 0 ? (ridge_max / noise >= cfg.min_snr) : (ridge_max > 0);
    if (keep) peaks.insert(col);
  }
  return std::vector<int>(peaks.begin(), peaks.end());
}

namespace {

struct LocalPeak {
  int index;  // apex (plateau midpoint)
  double height;
  double prominence = 0;
  double width = 0;
};

std::vector<LocalPeak> local_maxima(const std::vector<double>& row) {
  std::vector<LocalPeak> peaks;
  const int n = static_cast<int>(row.size());
  int i = 1;
  while (i < n - 1) {
    if (row[static_cast<size_t>(i)] > row[static_cast<size_t>(i - 1)]) {
      int ahead = i + 1;
      while (ahead < n - 1 && row[static_cast<size_t>(ahead)] == row[static_cast<size_t>(i)])
        ++ahead;
      if (row[static_cast<size_t>(ahead)] < row[static_cast<size_t>(i)])
        peaks.push_back({(i + ahead - 1) / 2, row[static_cast<size_t>(i)], 0, 0});
      i = ahead;
      continue;
    }
    ++i;
  }
  return peaks;
}

void compute_prominences(const std::vector<double>& row, std::vector<LocalPeak>& peaks) {
  const int n = static_cast<int>(row.size());
  for (auto& p : peaks) {
    double left_min = p.height, right_min = p.height;
    for (int i = p.index - 1; i >= 0; --i) {
      if (row[static_cast<size_t>(i)] > p.height) break;
      left_min = std::min(left_min, row[static_cast<size_t>(i)]);
    }
    for (int i = p.index + 1; i < n; ++i) {
      if (row[static_cast<size_t>(i)] > p.height) break;
      right_min = std::min(right_min, row[static_cast<size_t>(i)]);
    }
    p.prominence = p.height - std::max(left_min, right_min);
  }
}

void compute_widths(const std::vector<double>& row, std::vector<LocalPeak>& peaks) {
  const int n = static_cast<int>(row.size());
  for (auto& p : peaks) {
    const double h = p.height - 0.5 * p.prominence;
    double left = 0, right = n - 1;
    for (int i = p.index; i >= 0; --i) {
      if (row[static_cast<size_t>(i)] < h) {
        const double lo = row[static_cast<size_t>(i)], hi = row[static_cast<size_t>(i + 1)];
        left = i + (h - lo) / (hi - lo);
        break;
      }
      left = i;
    }
    for (int i = p.index; i < n; ++i) {
      if (row[static_cast<size_t>(i)] < h) {
        const double lo = row[static_cast<size_t>(i)], hi = row[static_cast<size_t>(i - 1)];
        right = i - (h - lo) / (hi - lo);
        break;
      }
      right = i;
    }
    p.width = right - left;
  }
}

}  // namespace

std::vector<int> detect_peaks_local(const std::vector<double>& row,
                                    const PeakDetectorConfig& cfg) {
  cfg.validate();
  if (row.size() < 3) return {};
  auto peaks = local_maxima(row);
  if (peaks.empty()) return {};
  compute_prominences(row, peaks);

  const double max_val = *std::max_element(row.begin(), row.end());
  const double min_prominence = max_val / static_cast<double>(row.size());
  peaks.erase(std::remove_if(peaks.begin(), peaks.end(),
                             [&](const LocalPeak& p) { return p.prominence < min_prominence; }),
              peaks.end());
  if (peaks.empty()) return {};

  compute_widths(row, peaks);
  std::vector<int> out;
  for (const auto& p : peaks)
    if (p.width >= cfg.lm_width) out.push_back(p.index);
  return out;
}

PeakFeatureVector featurize(const std::vector<int>& peaks, int bin_width, int signal_len) {
  if (bin_width < 1 || signal_len < 1 || signal_len % bin_width != 0)
    throw std::invalid_argument("featurize: signal length must be a multiple of the bin width");
  PeakFeatureVector fv;
  fv.bin_width = bin_width;
  fv.counts.assign(static_cast<size_t>(signal_len / bin_width), 0);
  for (int p : peaks) {
    if (p < 0 || p >= signal_len)
      throw std::invalid_argument("featurize: peak index out of range");
    fv.counts[static_cast<size_t>(p / bin_width)]++;
  }
  return fv;
}

}  // namespace spectral_forge
