#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectral_forge/rruff.hpp"

namespace spectral_forge {

enum class NormMode { MaxAbs, MinMax };

struct PreprocessConfig {
  int n_min = 8;               // minimum samples per class
  double range_lo = 200.0;     // cm^-1
  double range_hi = 1600.0;    // cm^-1
  double grid_step = 1.0;      // cm^-1
  int target_len = 1392;       // truncated grid length, multiple of 16
  NormMode norm_mode = NormMode::MinMax;

  void validate() const;
};

/// Fixed-grid resampled spectra with labels. Immutable after construction.
struct SpectralDataset {
  std::vector<double> grid;              // shared shift axis, length target_len
  int target_len = 0;
  std::vector<float> rows;               // row-major [num_rows x target_len]
  std::vector<int> labels;               // class index per row
  std::vector<std::string> class_names;  // ordered
  std::vector<int> class_counts;
  std::vector<std::string> provenance;   // spectrum ids (rruff_id:path)

  int num_rows() const { return static_cast<int>(labels.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  const float* row(int i) const { return rows.data() + static_cast<size_t>(i) * target_len; }
  std::vector<double> row_vec(int i) const;
};

enum class AugmentOp { AddTanh, AddCos, GaussNoise, SubsampleInterp };

struct AugmentationSpec {
  std::vector<AugmentOp> ops = {AugmentOp::AddTanh, AugmentOp::AddCos, AugmentOp::GaussNoise,
                                AugmentOp::SubsampleInterp};
  // SubsampleInterp carries double weight: interpolation is drawn more often.
  std::vector<double> weights = {1.0, 1.0, 1.0, 2.0};
  double amplitude_scale = 0.2;   // smooth-additive amplitude, x mean(row)
  double noise_scale = 0.02;      // gaussian sigma, x mean(row)
  double keep_fraction = 0.5;     // subsample-interp kept fraction
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct EmptyAfterPruningError : std::runtime_error {
  EmptyAfterPruningError() : std::runtime_error("no class reaches n_min samples") {}
};
struct DegenerateSpectrumError : std::runtime_error {
  explicit DegenerateSpectrumError(const std::string& id)
      : std::runtime_error("fewer than 2 points inside the resampling range: " + id) {}
};
struct ConstantRowError : std::runtime_error {
  ConstantRowError() : std::runtime_error("cannot normalize a constant row") {}
};
struct DatasetFormatError : std::runtime_error {
  explicit DatasetFormatError(const std::string& w) : std::runtime_error(w) {}
};

// --- operations -------------------------------------------------------------

/// Keeps exactly the classes (mineral names) with count >= n_min, preserving
/// relative order.
RawCorpus prune_classes(const RawCorpus& corpus, int n_min);

/// Linear interpolation of a spectrum onto the 200..1600 step-1 grid (1401
/// points), zero outside the spectrum's own span, truncated to the first
/// target_len points. No smoothing.
std::vector<double> resample(const Spectrum& spectrum, const PreprocessConfig& cfg);

std::vector<double> normalize(const std::vector<double>& row, NormMode mode);

/// Translates row contents by delta grid steps (1 step = 1 cm^-1), zero
/// filling vacated positions. |delta| must be < row length.
std::vector<double> shift_spectrum(const std::vector<double>& row, int delta);

/// Applies one augmentation op sampled by weight; deterministic in
/// spec.rng_seed. Dominant peak positions are preserved by construction.
std::vector<double> augment(const std::vector<double>& row, const AugmentationSpec& spec);

/// Same as augment() but drawing from a caller-owned rng stream (training
/// loops advance one stream across a whole run).
std::vector<double> augment_with_rng(const std::vector<double>& row, const AugmentationSpec& spec,
                                     std::mt19937_64& rng);

/// Full batch pipeline: prune, resample, normalize, label. Class names are
/// ordered by first appearance in the corpus.
SpectralDataset build_dataset(const RawCorpus& corpus, const PreprocessConfig& cfg);

// --- persistence ------------------------------------------------------------

/// Binary layout (documented in docs/formats.md): magic "SFDATA1\n",
/// u32 header length, JSON header, then row-major float32 LE matrix.
void save_dataset(const SpectralDataset& ds, const std::string& path);
SpectralDataset load_dataset(const std::string& path);

/// Flat key=value config text (n_min, range_lo, range_hi, norm_mode, seed...).
PreprocessConfig parse_preprocess_config(const std::string& text);
std::string format_preprocess_config(const PreprocessConfig& cfg, std::uint64_t seed);

}  // namespace spectral_forge
