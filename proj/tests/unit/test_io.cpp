#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "ptloss/error.hpp"
#include "ptloss/io.hpp"
#include "ptloss/rng.hpp"

using namespace ptloss;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ptloss_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(7, "samples") == derive_seed(7, "samples"));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, "search", i));
  seen.insert(derive_seed(7, "samples"));
  seen.insert(derive_seed(8, "samples"));
  CHECK(seen.size() == 102u);
}

TEST_CASE("Rng draws stay in range") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.below(3) < 3u);
    const double v = rng.uniform(-1.0, 10.0);
    CHECK((v >= -1.0 && v <= 10.0));
  }
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("doubles survive text round trips") {
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.30000000000000004}) {
    CHECK(io::parse_double(io::format_double(v), "test") == v);
    CHECK(io::Json::parse(io::Json(v).dump()).get<double>() == v);
  }
  CHECK_THROWS_AS(io::parse_double("1.5x", "test"), SchemaError);
}

TEST_CASE("probability and label files round trip") {
  const std::vector<ProbVector> rows{ProbVector({0.1, 0.2, 0.7}), ProbVector({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0})};
  io::write_probabilities_csv(scratch("p.csv"), rows);
  CHECK(io::read_probabilities_csv(scratch("p.csv")) == rows);
  const std::vector<std::size_t> labels{0, 2, 1};
  io::write_labels_csv(scratch("l.csv"), labels);
  CHECK(io::read_labels_csv(scratch("l.csv")) == labels);

  io::write_text(scratch("bad.csv"), "p_0,p_1\n0.5,0.6\n");
  CHECK_THROWS_AS(io::read_probabilities_csv(scratch("bad.csv")), Error);
  io::write_text(scratch("hdr.csv"), "q_0,q_1\n0.5,0.5\n");
  CHECK_THROWS_AS(io::read_probabilities_csv(scratch("hdr.csv")), SchemaError);
  CHECK_THROWS_AS(io::read_labels_csv(scratch("missing.csv")), IoError);
}

TEST_CASE("coefficient JSON round trip") {
  const PerturbationConfig cfg({{0.1, -2.0}, {3.5, 1e-9}}, false);
  CHECK(io::config_from_json(io::to_json(cfg)) == cfg);
  const auto tied = PerturbationConfig::tied({1.0, 2.0, 3.0});
  const auto doc = io::to_json(tied);
  CHECK(doc.at("order") == 3);
  CHECK(doc.at("tie_classes") == true);
  CHECK(io::config_from_json(doc) == tied);
  io::Json wrong = doc;
  wrong["order"] = 2;
  CHECK_THROWS_AS(io::config_from_json(wrong), SchemaError);
}

TEST_CASE("sha256 of a known string") {
  io::write_text(scratch("abc.txt"), "abc");
  CHECK(io::sha256_file(scratch("abc.txt")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
