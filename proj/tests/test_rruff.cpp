#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "spectral_forge/io_util.hpp"
#include "spectral_forge/rruff.hpp"

using namespace spectral_forge;
namespace fs = std::filesystem;

namespace {

const char* kRawName = "Dolomite__R040030__Broad_Scan__532__0__unoriented__Raman_Data_RAW.txt";

std::string minimal_contents(const std::string& name = "Dolomite",
                             const std::string& id = "R040030") {
  return "##NAMES=" + name + "\n##RRUFFID=" + id + "\n200.0, 1.0\n201.0, 2.0\n##END=\n";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sf_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("parse_spectrum_file: name, id and kind from headers/filename") {
  const Spectrum s = parse_spectrum_file(kRawName, minimal_contents());
  CHECK(s.mineral_name == "Dolomite");
  CHECK(s.rruff_id == "R040030");
  CHECK(s.kind == SpectrumKind::Raw);
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0] == std::pair<double, double>{200.0, 1.0});
  CHECK(s.points[1] == std::pair<double, double>{201.0, 2.0});

  const Spectrum p = parse_spectrum_file(
      "Quartz__R050125__Broad_Scan__780__0__oriented__Raman_Data_Processed.txt",
      minimal_contents("Quartz", "R050125"));
  CHECK(p.kind == SpectrumKind::Processed);
}

TEST_CASE("parse_spectrum_file: error contracts") {
  CHECK_THROWS_AS(parse_spectrum_file("NoSuffix__R1__file.txt", minimal_contents()),
                  UnknownKindSuffixError);

  // non-numeric intensity on the second data line
  try {
    parse_spectrum_file(kRawName, "##NAMES=X\n##RRUFFID=R1\n200.0, 1.0\n201.0, abc\n");
    FAIL("expected MalformedDataLineError");
  } catch (const MalformedDataLineError& e) {
    CHECK(e.line_no == 2);
  }

  CHECK_THROWS_AS(parse_spectrum_file(kRawName, "##RRUFFID=R1\n200, 1\n201, 2\n"),
                  MissingHeaderError);
  CHECK_THROWS_AS(parse_spectrum_file(kRawName, "##NAMES=X\n200, 1\n201, 2\n"),
                  MissingHeaderError);

  // non-finite values rejected
  CHECK_THROWS_AS(parse_spectrum_file(kRawName, "##NAMES=X\n##RRUFFID=R1\n200, inf\n201, 2\n"),
                  MalformedDataLineError);

  // duplicate shifts stay non-monotonic even after the re-sort
  CHECK_THROWS_AS(
      parse_spectrum_file(kRawName, "##NAMES=X\n##RRUFFID=R1\n200, 1\n200, 2\n201, 3\n"),
      NonMonotonicShiftError);
}

TEST_CASE("parse_spectrum_file: separators, metadata, and decreasing order") {
  const std::string contents =
      "##NAMES=Albite\n##RRUFFID=R040068\n##LASER_WAVELENGTH=532\n"
      "300.5 7.25\n299.5\t6.5\n298.5, 6\n";
  const Spectrum s = parse_spectrum_file(kRawName, contents);
  CHECK(s.metadata.at("LASER_WAVELENGTH") == "532");
  CHECK(s.metadata.count("resorted") == 1);  // arrived decreasing, re-sorted
  REQUIRE(s.points.size() == 3);
  CHECK(s.points.front().first == 298.5);
  CHECK(s.points.back().first == 300.5);
}

TEST_CASE("parse(format(s)) is the identity beyond 9 significant digits") {
  Spectrum s;
  s.mineral_name = "Test";
  s.rruff_id = "R1";
  s.kind = SpectrumKind::Raw;
  s.metadata["LOCALITY"] = "nowhere";
  for (int i = 0; i < 50; ++i)
    s.points.emplace_back(200.0 + i * 1.37, std::sin(i * 0.73) * 1234.5678);

  const Spectrum back = parse_spectrum_file(kRawName, format_spectrum_file(s));
  CHECK(back.mineral_name == s.mineral_name);
  CHECK(back.rruff_id == s.rruff_id);
  CHECK(back.metadata.at("LOCALITY") == "nowhere");
  REQUIRE(back.points.size() == s.points.size());
  for (size_t i = 0; i < s.points.size(); ++i) {
    CHECK(back.points[i].first == doctest::Approx(s.points[i].first).epsilon(1e-9));
    CHECK(back.points[i].second == doctest::Approx(s.points[i].second).epsilon(1e-9));
  }
}

TEST_CASE("load_corpus: kind filter, determinism, failure collection") {
  TempDir dir;
  auto put = [&](const std::string& name, const std::string& contents) {
    std::ofstream(dir.path / name) << contents;
  };
  put("A__R1__x__Raman_Data_RAW.txt", minimal_contents("A", "R1"));
  put("B__R2__x__Raman_Data_RAW.txt", minimal_contents("B", "R2"));
  put("C__R3__x__Raman_Data_RAW.txt", minimal_contents("C", "R3"));
  put("D__R4__x__Raman_Data_Processed.txt", minimal_contents("D", "R4"));
  put("E__R5__x__Raman_Data_Processed.txt", minimal_contents("E", "R5"));
  put("F__R6__x__Raman_Data_RAW.txt", "##NAMES=F\n##RRUFFID=R6\n200, zz\n201, 2\n");
  put("notes.md", "not a spectrum");

  const LoadResult raw = load_corpus(dir.path.string(), SpectrumKind::Raw);
  CHECK(raw.corpus.spectra.size() == 3);  // F fails to parse, D/E filtered
  CHECK(raw.failures.size() == 1);
  CHECK(raw.failures[0].path.find("F__R6") != std::string::npos);

  const LoadResult again = load_corpus(dir.path.string(), SpectrumKind::Raw);
  CHECK(again.corpus.manifest_hash == raw.corpus.manifest_hash);
  for (size_t i = 0; i < raw.corpus.spectra.size(); ++i)
    CHECK(again.corpus.spectra[i].source_path == raw.corpus.spectra[i].source_path);

  const LoadResult proc = load_corpus(dir.path.string(), SpectrumKind::Processed);
  CHECK(proc.corpus.spectra.size() == 2);

  CHECK_THROWS_AS(load_corpus((dir.path / "missing").string(), SpectrumKind::Raw),
                  EmptyCorpusError);
}

TEST_CASE("persist_split: round-trip identity and error paths") {
  TempDir dir;
  std::vector<SplitRecord> records;
  for (int i = 0; i < 10; ++i)
    records.push_back({(dir.path / ("s" + std::to_string(i) + ".txt")).string(),
                       "Class" + std::to_string(i % 2), i % 5});
  const std::string manifest = (dir.path / "split.tsv").string();
  persist_split("demo", records, 5, manifest);

  const LoadedSplit loaded = load_split(manifest);
  CHECK(loaded.dataset_id == "demo");
  CHECK(loaded.fold_count == 5);
  REQUIRE(loaded.records.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded.records[i].source_path == records[i].source_path);
    CHECK(loaded.records[i].label == records[i].label);
    CHECK(loaded.records[i].fold == records[i].fold);
  }
  // header line pins the format version
  std::ifstream in(manifest);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# spectral-forge split v1");

  // fold outside [0, k) refused
  CHECK_THROWS_AS(persist_split("demo", {{"p", "l", 7}}, 5, manifest), SplitManifestError);

  // reload with file checking names the missing path
  try {
    load_split(manifest, /*require_files=*/true);
    FAIL("expected SplitManifestError");
  } catch (const SplitManifestError& e) {
    CHECK(std::string(e.what()).find("s0.txt") != std::string::npos);
  }
}
