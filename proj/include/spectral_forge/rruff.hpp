#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spectral_forge {

enum class SpectrumKind { Raw, Processed };

/// One Raman trace: intensity over Raman shift (cm^-1) plus provenance.
/// Shifts are strictly increasing and there are at least 2 points.
struct Spectrum {
  std::string mineral_name;
  std::string rruff_id;
  SpectrumKind kind = SpectrumKind::Raw;
  std::vector<std::pair<double, double>> points;  // (shift, intensity)
  std::string source_path;
  // Header keys beyond NAMES/RRUFFID, preserved verbatim.
  std::map<std::string, std::string> metadata;
};

struct RawCorpus {
  std::vector<Spectrum> spectra;
  std::uint64_t manifest_hash = 0;  // digest of file paths + sizes
};

// --- parse errors ----------------------------------------------------------

struct MissingHeaderError : std::runtime_error {
  std::string key;
  explicit MissingHeaderError(std::string k)
      : std::runtime_error("missing required header ##" + k + "="), key(std::move(k)) {}
};

struct MalformedDataLineError : std::runtime_error {
  int line_no;
  explicit MalformedDataLineError(int line)
      : std::runtime_error("malformed data line " + std::to_string(line)), line_no(line) {}
};

struct UnknownKindSuffixError : std::runtime_error {
  explicit UnknownKindSuffixError(const std::string& filename)
      : std::runtime_error("filename does not carry a RAW/Processed suffix: " + filename) {}
};

struct NonMonotonicShiftError : std::runtime_error {
  int line_no;
  explicit NonMonotonicShiftError(int line)
      : std::runtime_error("duplicate shift value at data line " + std::to_string(line)),
        line_no(line) {}
};

struct EmptyCorpusError : std::runtime_error {
  explicit EmptyCorpusError(const std::string& dir)
      : std::runtime_error("no parseable spectra under " + dir) {}
};

struct SplitManifestError : std::runtime_error {
  explicit SplitManifestError(const std::string& w) : std::runtime_error(w) {}
};

// --- operations -------------------------------------------------------------

/// Parses one RRUFF export. The kind comes from the filename alone
/// (…Raman_Data_RAW / …Raman_Data_Processed); data lines are comma- or
/// whitespace-separated shift/intensity pairs. Spectra arriving in
/// decreasing shift order are re-sorted ascending (a warning is recorded in
/// metadata["resorted"]); equal consecutive shifts are rejected.
Spectrum parse_spectrum_file(const std::string& path, const std::string& contents);

/// RRUFF-format text for a spectrum (12 significant digits, so
/// parse(format(s)) reproduces s to well past 9 digits).
std::string format_spectrum_file(const Spectrum& spectrum);

struct ParseFailure {
  std::string path;
  std::string message;
};

struct LoadResult {
  RawCorpus corpus;
  std::vector<ParseFailure> failures;
};

/// Loads every *.txt under root_dir whose filename matches kind_filter, in
/// deterministic path order. Parse failures are collected, not dropped.
LoadResult load_corpus(const std::string& root_dir, SpectrumKind kind_filter);

// --- split manifests --------------------------------------------------------

struct SplitRecord {
  std::string source_path;
  std::string label;
  int fold = 0;
};

/// Writes the plain-text split manifest (header "# spectral-forge split v1",
/// one tab-separated record per line). Every record's fold must lie in
/// [0, fold_count).
void persist_split(const std::string& dataset_id, const std::vector<SplitRecord>& records,
                   int fold_count, const std::string& path);

struct LoadedSplit {
  std::string dataset_id;
  int fold_count = 0;
  std::vector<SplitRecord> records;
};

/// Reloads a manifest; when require_files is set, every referenced
/// source_path must exist on disk (the error names the missing path).
LoadedSplit load_split(const std::string& path, bool require_files = false);

}  // namespace spectral_forge
