#include <cmath>
#include <random>

#include "doctest.h"
#include "spectral_forge/peaks.hpp"

using namespace spectral_forge;

namespace {

std::vector<double> gaussian_bump(int len, double center, double sigma, double amp) {
  std::vector<double> row(static_cast<size_t>(len), 0.0);
  for (int i = 0; i < len; ++i)
    row[static_cast<size_t>(i)] += amp * std::exp(-std::pow((i - center) / sigma, 2) / 2);
  return row;
}

// Independent localization oracle: densely evaluate the ricker response at
// the width matching the bump and take the argmax position.
int dense_cwt_argmax(const std::vector<double>& row, int width) {
  const auto resp = cwt_ricker(row, {width});
  return static_cast<int>(std::max_element(resp[0].begin(), resp[0].end()) - resp[0].begin());
}

}  // namespace

TEST_CASE("detect_peaks_cwt: all-zero row has no structure") {
  CHECK(detect_peaks_cwt(std::vector<double>(1392, 0.0), {}).empty());
}

TEST_CASE("detect_peaks_cwt: single gaussian bump located within +-3 of the oracle") {
  const auto row = gaussian_bump(1392, 500, 8, 1.0);
  PeakDetectorConfig cfg;
  const auto peaks = detect_peaks_cwt(row, cfg);
  REQUIRE(peaks.size() == 1);
  const int oracle = dense_cwt_argmax(row, 8);
  CHECK(std::abs(oracle - 500) <= 1);  // oracle sanity
  CHECK(std::abs(peaks[0] - oracle) <= 3);
}

TEST_CASE("detect_peaks_cwt: two bumps 200 apart -> exactly two peaks at the centers") {
  auto row = gaussian_bump(1392, 400, 8, 1.0);
  const auto second = gaussian_bump(1392, 600, 8, 0.8);
  for (size_t i = 0; i < row.size(); ++i) row[i] += second[i];
  const auto peaks = detect_peaks_cwt(row, {});
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(peaks[0] - 400) <= 3);
  CHECK(std::abs(peaks[1] - 600) <= 3);
}

TEST_CASE("detect_peaks_cwt: positions invariant under uniform intensity scaling") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto row = gaussian_bump(1392, 300, 6, 1.0);
  const auto more = gaussian_bump(1392, 890, 10, 0.5);
  for (size_t i = 0; i < row.size(); ++i) row[i] += more[i] + noise(rng);
  auto scaled = row;
  for (auto& v : scaled) v *= 5.0;
  CHECK(detect_peaks_cwt(row, {}) == detect_peaks_cwt(scaled, {}));
}

TEST_CASE("detect_peaks_cwt: returned indices strictly increasing") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> row(1392, 0.0);
  for (int c : {250, 420, 640, 780, 1100, 1300}) {
    const auto b = gaussian_bump(1392, c, 7, 1.0);
    for (size_t i = 0; i < row.size(); ++i) row[i] += b[i];
  }
  for (auto& v : row) v += noise(rng);
  const auto peaks = detect_peaks_cwt(row, {});
  for (size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] > peaks[i - 1]);
}

TEST_CASE("detect_peaks_local: ramp, triangular widths, prominence rule") {
  PeakDetectorConfig cfg;

  std::vector<double> ramp(1392);
  for (int i = 0; i < 1392; ++i) ramp[static_cast<size_t>(i)] = i;
  CHECK(detect_peaks_local(ramp, cfg).empty());

  // isolated triangular peak of width 20 -> kept, apex exact
  std::vector<double> tri(1392, 0.0);
  for (int i = -10; i <= 10; ++i)
    tri[static_cast<size_t>(700 + i)] = 1.0 - std::abs(i) / 10.0;
  const auto kept = detect_peaks_local(tri, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == 700);

  // same shape but width 4 -> filtered by the width rule
  std::vector<double> narrow(1392, 0.0);
  for (int i = -2; i <= 2; ++i)
    narrow[static_cast<size_t>(700 + i)] = 1.0 - std::abs(i) / 2.0;
  CHECK(detect_peaks_local(narrow, cfg).empty());
}

TEST_CASE("featurize: bin arithmetic and boundaries") {
  CHECK(featurize({}, 12, 1392).counts.size() == 116);

  const auto fv = featurize({0, 11}, 12, 1392);
  CHECK(fv.counts[0] == 2);

  CHECK(featurize({12}, 12, 1392).counts[1] == 1);
  CHECK(featurize({1391}, 12, 1392).counts[115] == 1);

  CHECK_THROWS_AS(featurize({1392}, 12, 1392), std::invalid_argument);
  CHECK_THROWS_AS(featurize({-1}, 12, 1392), std::invalid_argument);

  // permutation invariance + count preservation
  const auto a = featurize({5, 100, 700, 1391, 700}, 12, 1392);
  const auto b = featurize({700, 1391, 5, 700, 100}, 12, 1392);
  CHECK(a.counts == b.counts);
  int total = 0;
  for (int c : a.counts) total += c;
  CHECK(total == 5);
}
