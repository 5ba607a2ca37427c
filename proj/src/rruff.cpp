#include "spectral_forge/rruff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "spectral_forge/io_util.hpp"

namespace spectral_forge {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view tok, double& out) {
  const std::string tmp(tok);  // from_chars for doubles is incomplete on some libstdc++
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && !tmp.empty() && std::isfinite(out);
}

// Splits a data line on commas and/or whitespace into at most 3 tokens.
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() &&
           (line[i] == ',' || std::isspace(static_cast<unsigned char>(line[i]))))
      ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ',' &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

SpectrumKind kind_from_filename(const std::string& path) {
  const std::string name = fs::path(path).filename().string();
  if (name.find("Raman_Data_RAW") != std::string::npos) return SpectrumKind::Raw;
  if (name.find("Raman_Data_Processed") != std::string::npos) return SpectrumKind::Processed;
  throw UnknownKindSuffixError(name);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t n) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Spectrum parse_spectrum_file(const std::string& path, const std::string& contents) {
  Spectrum spec;
  spec.source_path = path;
  spec.kind = kind_from_filename(path);

  std::istringstream in(contents);
  std::string line;
  int line_no = 0;
  int data_line_no = 0;  // line numbering the error contract uses: data lines only
  bool ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.rfind("##", 0) == 0) {
      sv.remove_prefix(2);
      const size_t eq = sv.find('=');
      const std::string key(trim(sv.substr(0, eq == std::string_view::npos ? sv.size() : eq)));
      const std::string value(
          eq == std::string_view::npos ? std::string_view{} : trim(sv.substr(eq + 1)));
      if (key == "END") {
        ended = true;
        break;
      }
      if (key == "NAMES")
        spec.mineral_name = value;
      else if (key == "RRUFFID")
        spec.rruff_id = value;
      else
        spec.metadata[key] = value;
      continue;
    }
    ++data_line_no;
    const auto fields = split_fields(sv);
    double shift, intensity;
    if (fields.size() != 2 || !parse_double(fields[0], shift) ||
        !parse_double(fields[1], intensity))
      throw MalformedDataLineError(data_line_no);
    spec.points.emplace_back(shift, intensity);
  }
  (void)ended;

  if (spec.mineral_name.empty()) throw MissingHeaderError("NAMES");
  if (spec.rruff_id.empty()) throw MissingHeaderError("RRUFFID");
  if (spec.points.size() < 2)
    throw MalformedDataLineError(data_line_no == 0 ? 1 : data_line_no);

  // Some exports run high-to-low; re-sort ascending rather than reject.
  if (!std::is_sorted(spec.points.begin(), spec.points.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; })) {
    std::stable_sort(spec.points.begin(), spec.points.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    spec.metadata["resorted"] = "shift order was decreasing; re-sorted ascending";
  }
  for (size_t i = 1; i < spec.points.size(); ++i)
    if (spec.points[i].first <= spec.points[i - 1].first)
      throw NonMonotonicShiftError(static_cast<int>(i + 1));

  return spec;
}

std::string format_spectrum_file(const Spectrum& spectrum) {
  std::ostringstream os;
  os << "##NAMES=" << spectrum.mineral_name << "\n";
  os << "##RRUFFID=" << spectrum.rruff_id << "\n";
  for (const auto& [key, value] : spectrum.metadata) os << "##" << key << "=" << value << "\n";
  char buf[80];
  for (const auto& [shift, intensity] : spectrum.points) {
    std::snprintf(buf, sizeof(buf), "%.12g, %.12g\n", shift, intensity);
    os << buf;
  }
  os << "##END=\n";
  return os.str();
}

LoadResult load_corpus(const std::string& root_dir, SpectrumKind kind_filter) {
  if (!fs::exists(root_dir)) throw EmptyCorpusError(root_dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  LoadResult result;
  std::uint64_t h = 1469598103934665603ull;
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (const auto& file : files) {
    SpectrumKind k;
    try {
      k = kind_from_filename(file.string());
    } catch (const UnknownKindSuffixError&) {
      continue;  // not a Raman export
    }
    if (k != kind_filter) continue;
    try {
      Spectrum spec = parse_spectrum_file(file.string(), read_file(file.string()));
      const auto key = std::make_tuple(spec.rruff_id, static_cast<int>(spec.kind),
                                       spec.source_path);
      if (!seen.insert(key).second) continue;  // duplicate (id, kind, path) triple
      const std::string p = file.string();
      const auto size = static_cast<std::uint64_t>(fs::file_size(file));
      h = fnv1a(h, p.data(), p.size());
      h = fnv1a(h, &size, sizeof(size));
      result.corpus.spectra.push_back(std::move(spec));
    } catch (const std::exception& e) {
      result.failures.push_back({file.string(), e.what()});
    }
  }
  if (result.corpus.spectra.empty()) throw EmptyCorpusError(root_dir);
  result.corpus.manifest_hash = h;
  return result;
}

void persist_split(const std::string& dataset_id, const std::vector<SplitRecord>& records,
                   int fold_count, const std::string& path) {
  if (fold_count < 1) throw SplitManifestError("fold count must be >= 1");
  for (const auto& r : records)
    if (r.fold < 0 || r.fold >= fold_count)
      throw SplitManifestError("fold index " + std::to_string(r.fold) + " outside [0, " +
                               std::to_string(fold_count) + ") for " + r.source_path);
  std::ostringstream os;
  os << "# spectral-forge split v1\n";
  os << "# dataset\t" << dataset_id << "\tfolds\t" << fold_count << "\n";
  for (const auto& r : records)
    os << r.source_path << "\t" << r.label << "\t" << r.fold << "\n";
  atomic_write_file(path, os.str());
}

LoadedSplit load_split(const std::string& path, bool require_files) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "# spectral-forge split v1")
    throw SplitManifestError("not a spectral-forge split manifest: " + path);
  LoadedSplit split;
  if (!std::getline(in, line)) throw SplitManifestError("truncated manifest: " + path);
  {
    std::istringstream meta(line);
    std::string hash_mark, key1, key2;
    meta >> hash_mark >> key1 >> split.dataset_id;  // "# dataset <id> folds <k>"
    meta >> key2 >> split.fold_count;
    if (split.fold_count < 1) throw SplitManifestError("bad fold count in manifest: " + path);
  }
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    SplitRecord rec;
    const size_t t1 = line.find('\t');
    const size_t t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw SplitManifestError("malformed manifest line " + std::to_string(line_no));
    rec.source_path = line.substr(0, t1);
    rec.label = line.substr(t1 + 1, t2 - t1 - 1);
    rec.fold = std::stoi(line.substr(t2 + 1));
    if (rec.fold < 0 || rec.fold >= split.fold_count)
      throw SplitManifestError("fold index out of range at line " + std::to_string(line_no));
    if (require_files && !fs::exists(rec.source_path))
      throw SplitManifestError("manifest references missing file: " + rec.source_path);
    split.records.push_back(std::move(rec));
  }
  return split;
}

}  // namespace spectral_forge
