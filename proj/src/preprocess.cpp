#include "spectral_forge/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "json.hpp"
#include "spectral_forge/io_util.hpp"

namespace spectral_forge {

using nlohmann::json;

void PreprocessConfig::validate() const {
  if (n_min < 1) throw std::invalid_argument("n_min must be >= 1");
  if (!(range_hi > range_lo) || grid_step <= 0)
    throw std::invalid_argument("bad resampling range");
  const int full = static_cast<int>(std::floor((range_hi - range_lo) / grid_step)) + 1;
  if (full < target_len)
    throw std::invalid_argument("grid has fewer points than target_len");
  if (target_len % 16 != 0) throw std::invalid_argument("target_len must be divisible by 16");
}

void AugmentationSpec::validate() const {
  if (ops.empty() || ops.size() != weights.size())
    throw std::invalid_argument("augmentation ops/weights mismatch");
  double total = 0, max_other = 0, interp = -1;
  for (size_t i = 0; i < ops.size(); ++i) {
    if (weights[i] < 0) throw std::invalid_argument("augmentation weights must be >= 0");
    total += weights[i];
    if (ops[i] == AugmentOp::SubsampleInterp)
      interp = weights[i];
    else
      max_other = std::max(max_other, weights[i]);
  }
  if (total <= 0) throw std::invalid_argument("augmentation weights must sum > 0");
  if (interp >= 0 && interp < max_other)
    throw std::invalid_argument("subsample-interp weight must be >= each other weight");
}

std::vector<double> SpectralDataset::row_vec(int i) const {
  const float* r = row(i);
  return std::vector<double>(r, r + target_len);
}

RawCorpus prune_classes(const RawCorpus& corpus, int n_min) {
  if (n_min < 1) throw std::invalid_argument("n_min must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& s : corpus.spectra) counts[s.mineral_name]++;
  RawCorpus out;
  out.manifest_hash = corpus.manifest_hash;
  for (const auto& s : corpus.spectra)
    if (counts[s.mineral_name] >= n_min) out.spectra.push_back(s);
  if (out.spectra.empty()) throw EmptyAfterPruningError();
  return out;
}

std::vector<double> resample(const Spectrum& spectrum, const PreprocessConfig& cfg) {
  cfg.validate();
  const auto& pts = spectrum.points;
  // Count points inside the retained range; interpolation needs 2 anchors.
  int inside = 0;
  for (const auto& p : pts)
    if (p.first >= cfg.range_lo && p.first <= cfg.range_hi) ++inside;
  if (inside < 2)
    throw DegenerateSpectrumError(spectrum.rruff_id.empty() ? spectrum.source_path
                                                            : spectrum.rruff_id);

  std::vector<double> out(static_cast<size_t>(cfg.target_len), 0.0);
  const double lo = pts.front().first, hi = pts.back().first;
  size_t seg = 0;
  for (int i = 0; i < cfg.target_len; ++i) {
    const double x = cfg.range_lo + i * cfg.grid_step;
    if (x < lo || x > hi) continue;  // outside the spectrum's own span -> 0
    while (seg + 2 < pts.size() && pts[seg + 1].first < x) ++seg;
    const auto& a = pts[seg];
    const auto& b = pts[seg + 1];
    const double t = (x - a.first) / (b.first - a.first);
    out[static_cast<size_t>(i)] = a.second + t * (b.second - a.second);
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& row, NormMode mode) {
  if (row.empty()) throw std::invalid_argument("normalize: empty row");
  std::vector<double> out(row.size());
  if (mode == NormMode::MaxAbs) {
    double m = 0;
    for (double v : row) m = std::max(m, std::abs(v));
    if (m == 0) throw ConstantRowError();
    for (size_t i = 0; i < row.size(); ++i) out[i] = row[i] / m;
  } else {
    const auto [mn, mx] = std::minmax_element(row.begin(), row.end());
    if (*mx <= *mn) throw ConstantRowError();
    const double span = *mx - *mn;
    for (size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - *mn) / span;
  }
  return out;
}

std::vector<double> shift_spectrum(const std::vector<double>& row, int delta) {
  const int n = static_cast<int>(row.size());
  if (std::abs(delta) >= n) throw std::invalid_argument("shift exceeds row length");
  std::vector<double> out(row.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const int j = i + delta;
    if (j >= 0 && j < n) out[static_cast<size_t>(j)] = row[static_cast<size_t>(i)];
  }
  return out;
}

namespace {

double row_mean(const std::vector<double>& row) {
  double s = 0;
  for (double v : row) s += v;
  return s / static_cast<double>(row.size());
}

}  // namespace

std::vector<double> augment_with_rng(const std::vector<double>& row, const AugmentationSpec& spec,
                                     std::mt19937_64& rng) {
  spec.validate();
  std::discrete_distribution<int> pick(spec.weights.begin(), spec.weights.end());
  const AugmentOp op = spec.ops[static_cast<size_t>(pick(rng))];
  const int n = static_cast<int>(row.size());
  const double mean = row_mean(row);
  std::vector<double> out = row;

  switch (op) {
    case AugmentOp::AddTanh: {
      // Smooth sigmoid ramp across the full axis; amplitude tied to the mean
      // so dominant peaks stay dominant.
      std::uniform_real_distribution<double> center(0.25, 0.75), width(0.05, 0.25), sgn(0, 1);
      const double c = center(rng) * n, w = width(rng) * n;
      const double amp = spec.amplitude_scale * mean * (sgn(rng) < 0.5 ? 1.0 : -1.0);
      for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] += amp * std::tanh((i - c) / w);
      break;
    }
    case AugmentOp::AddCos: {
      std::uniform_real_distribution<double> phase(0, 2 * M_PI), cycles(0.5, 2.0);
      const double ph = phase(rng), cy = cycles(rng);
      const double amp = spec.amplitude_scale * mean;
      for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] += amp * std::cos(2 * M_PI * cy * i / n + ph);
      break;
    }
    case AugmentOp::GaussNoise: {
      const double sigma = spec.noise_scale * mean;
      if (sigma > 0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& v : out) v += noise(rng);
      }
      break;
    }
    case AugmentOp::SubsampleInterp: {
      // Keep a random subset of indices (always the endpoints) and linearly
      // re-interpolate the gaps.
      std::bernoulli_distribution keep(spec.keep_fraction);
      std::vector<int> kept;
      kept.push_back(0);
      for (int i = 1; i < n - 1; ++i)
        if (keep(rng)) kept.push_back(i);
      kept.push_back(n - 1);
      int seg = 0;
      for (int i = 0; i < n; ++i) {
        while (seg + 2 < static_cast<int>(kept.size()) && kept[static_cast<size_t>(seg + 1)] < i)
          ++seg;
        const int a = kept[static_cast<size_t>(seg)], b = kept[static_cast<size_t>(seg + 1)];
        const double t = (i - a) / static_cast<double>(b - a);
        out[static_cast<size_t>(i)] =
            row[static_cast<size_t>(a)] + t * (row[static_cast<size_t>(b)] - row[static_cast<size_t>(a)]);
      }
      break;
    }
  }
  return out;
}

std::vector<double> augment(const std::vector<double>& row, const AugmentationSpec& spec) {
  std::mt19937_64 rng(spec.rng_seed);
  return augment_with_rng(row, spec, rng);
}

SpectralDataset build_dataset(const RawCorpus& corpus, const PreprocessConfig& cfg) {
  cfg.validate();
  const RawCorpus pruned = prune_classes(corpus, cfg.n_min);

  SpectralDataset ds;
  ds.target_len = cfg.target_len;
  ds.grid.resize(static_cast<size_t>(cfg.target_len));
  for (int i = 0; i < cfg.target_len; ++i)
    ds.grid[static_cast<size_t>(i)] = cfg.range_lo + i * cfg.grid_step;

  std::map<std::string, int> class_index;
  for (const auto& s : pruned.spectra)
    if (class_index.emplace(s.mineral_name, static_cast<int>(class_index.size())).second)
      ds.class_names.push_back(s.mineral_name);
  ds.class_counts.assign(ds.class_names.size(), 0);

  ds.rows.reserve(pruned.spectra.size() * static_cast<size_t>(cfg.target_len));
  for (const auto& s : pruned.spectra) {
    const auto resampled = resample(s, cfg);
    const auto normed = normalize(resampled, cfg.norm_mode);
    for (double v : normed) ds.rows.push_back(static_cast<float>(v));
    const int label = class_index[s.mineral_name];
    ds.labels.push_back(label);
    ds.class_counts[static_cast<size_t>(label)]++;
    ds.provenance.push_back(s.rruff_id + ":" + s.source_path);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Dataset binary persistence
// ---------------------------------------------------------------------------

namespace {
constexpr char kDatasetMagic[8] = {'S', 'F', 'D', 'A', 'T', 'A', '1', '\n'};
}

void save_dataset(const SpectralDataset& ds, const std::string& path) {
  json header;
  header["format"] = "SFDATA1";
  header["target_len"] = ds.target_len;
  header["grid_lo"] = ds.grid.empty() ? 0.0 : ds.grid.front();
  header["grid_step"] = ds.grid.size() > 1 ? ds.grid[1] - ds.grid[0] : 1.0;
  header["num_rows"] = ds.num_rows();
  header["class_names"] = ds.class_names;
  header["class_counts"] = ds.class_counts;
  header["labels"] = ds.labels;
  header["provenance"] = ds.provenance;
  const std::string htext = header.dump();

  std::string blob;
  blob.reserve(htext.size() + ds.rows.size() * 4 + 16);
  blob.append(kDatasetMagic, sizeof(kDatasetMagic));
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  blob.append(reinterpret_cast<const char*>(&hlen), 4);
  blob.append(htext);
  blob.append(reinterpret_cast<const char*>(ds.rows.data()), ds.rows.size() * sizeof(float));
  atomic_write_file(path, blob);
}

SpectralDataset load_dataset(const std::string& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 12 || std::memcmp(blob.data(), kDatasetMagic, 8) != 0)
    throw DatasetFormatError("not a spectral-forge dataset: " + path);
  std::uint32_t hlen;
  std::memcpy(&hlen, blob.data() + 8, 4);
  if (blob.size() < 12 + hlen) throw DatasetFormatError("truncated dataset header: " + path);
  const json header = json::parse(blob.substr(12, hlen));

  SpectralDataset ds;
  ds.target_len = header.at("target_len").get<int>();
  const double lo = header.at("grid_lo").get<double>();
  const double step = header.at("grid_step").get<double>();
  ds.grid.resize(static_cast<size_t>(ds.target_len));
  for (int i = 0; i < ds.target_len; ++i) ds.grid[static_cast<size_t>(i)] = lo + i * step;
  header.at("class_names").get_to(ds.class_names);
  header.at("class_counts").get_to(ds.class_counts);
  header.at("labels").get_to(ds.labels);
  header.at("provenance").get_to(ds.provenance);

  const size_t expect = static_cast<size_t>(header.at("num_rows").get<int>()) *
                        static_cast<size_t>(ds.target_len) * sizeof(float);
  if (blob.size() - 12 - hlen != expect)
    throw DatasetFormatError("dataset payload size mismatch: " + path);
  ds.rows.resize(expect / sizeof(float));
  std::memcpy(ds.rows.data(), blob.data() + 12 + hlen, expect);
  return ds;
}

// ---------------------------------------------------------------------------
// Flat key=value config
// ---------------------------------------------------------------------------

PreprocessConfig parse_preprocess_config(const std::string& text) {
  PreprocessConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line is not key=value: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "n_min")
      cfg.n_min = std::stoi(value);
    else if (key == "range_lo")
      cfg.range_lo = std::stod(value);
    else if (key == "range_hi")
      cfg.range_hi = std::stod(value);
    else if (key == "grid_step")
      cfg.grid_step = std::stod(value);
    else if (key == "target_len")
      cfg.target_len = std::stoi(value);
    else if (key == "norm_mode") {
      if (value == "min_max")
        cfg.norm_mode = NormMode::MinMax;
      else if (value == "max_abs")
        cfg.norm_mode = NormMode::MaxAbs;
      else
        throw std::invalid_argument("unknown norm_mode: " + value);
    } else if (key == "seed") {
      // carried through configs for provenance; consumed by callers
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

std::string format_preprocess_config(const PreprocessConfig& cfg, std::uint64_t seed) {
  std::ostringstream os;
  os << "n_min=" << cfg.n_min << "\n";
  os << "range_lo=" << cfg.range_lo << "\n";
  os << "range_hi=" << cfg.range_hi << "\n";
  os << "grid_step=" << cfg.grid_step << "\n";
  os << "target_len=" << cfg.target_len << "\n";
  os << "norm_mode=" << (cfg.norm_mode == NormMode::MinMax ? "min_max" : "max_abs") << "\n";
  os << "seed=" << seed << "\n";
  return os.str();
}

}  // namespace spectral_forge
