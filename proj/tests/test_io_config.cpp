#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tearfilm/config.hpp"
#include "tearfilm/io.hpp"

using namespace tearfilm;
namespace fs = std::filesystem;
using config::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("tearfilm_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("CSV rows use CRLF and quote special cells") {
  const auto d = scratch_dir("csv");
  io::CsvWriter csv(d / "a.csv", {"name", "value"});
  csv.row(std::vector<std::string>{"plain", "a,b"});
  csv.row(std::vector<std::string>{"say \"hi\"", "two\nlines"});
  csv.row(std::vector<double>{0.1, 2.5e-300});
  CHECK_THROWS_AS(csv.row(std::vector<double>{1.0}), DimensionError);
  csv.close();
  CHECK(slurp(d / "a.csv") ==
        "name,value\r\nplain,\"a,b\"\r\n\"say \"\"hi\"\"\",\"two\nlines\"\r\n0.1,2.5e-300\r\n");
}

TEST_CASE("numbers format to their shortest round-trip text") {
  for (double v : {0.1, 1.0 / 3.0, -2.4085, 1e-17, 6.02214076e23}) CHECK(std::stod(io::format_number(v)) == v);
  CHECK(io::format_number(2.5) == "2.5");
}

TEST_CASE("binary fields are little-endian float64 with a sidecar") {
  const auto d = scratch_dir("field");
  Eigen::VectorXd v(6);
  v << 1.0, -2.5, 3.25, 0.0, 1e-300, 7.0;
  const auto files = io::write_field(d / "h_0000", v, {"h", 0.5, 3, 2});
  REQUIRE(files.size() == 2);
  const std::string bytes = slurp(d / "h_0000.bin");
  REQUIRE(bytes.size() == 48);
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  CHECK(std::memcmp(bytes.data(), one, 8) == 0);
  const auto side = json::parse(slurp(d / "h_0000.json"));
  CHECK(side["nx"] == 3);
  CHECK(side["ny"] == 2);
  CHECK(side["dtype"] == "float64");
  io::FieldMeta meta;
  const auto back = io::read_field(d / "h_0000.json", &meta);
  CHECK(back == v);
  CHECK(meta.variable == "h");
  CHECK(meta.time == 0.5);
  CHECK_THROWS_AS(io::write_field(d / "bad", v, {"h", 0.0, 4, 2}), DimensionError);
  std::ofstream(d / "h_0000.bin", std::ios::binary | std::ios::app) << "x";
  CHECK_THROWS(io::read_field(d / "h_0000.bin"));
}

TEST_CASE("SHA-256 and manifests") {
  const auto d = scratch_dir("manifest");
  io::write_atomic(d / "abc.txt", "abc");
  CHECK(io::sha256_file(d / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  io::Manifest m;
  m.config = json{{"mode", "full"}};
  m.started = io::utc_now();
  m.finished = m.started;
  m.files = {"abc.txt"};
  const auto path = io::write_manifest(d, m);
  const auto j = json::parse(slurp(path));
  CHECK(j["files"][0]["path"] == "abc.txt");
  CHECK(j["files"][0]["bytes"] == 3);
  CHECK(j["files"][0]["sha256"] == io::sha256_file(d / "abc.txt"));
  CHECK(j.contains("code_version"));
  CHECK(!fs::exists(d / "manifest.json.tmp"));
  m.files = {"missing.txt"};
  CHECK_THROWS(io::write_manifest(d, m));
}

}

TEST_SUITE("config") {

TEST_CASE("defaults describe the single-spot run") {
  const auto c = config::parse_config(json::parse(R"({"mode": "full"})"));
  CHECK(c.nx == 60);
  CHECK(c.ny == 60);
  CHECK(c.model.Pc == doctest::Approx(0.392));
  CHECK(c.evaporation.v_b == doctest::Approx(0.1));
  REQUIRE(c.evaporation.peaks.size() == 1);
  CHECK(c.integrator.tbu_threshold == doctest::Approx(1 / 4.5));
  CHECK(c.probe_points().front() == std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("unknown keys and bad types name the key path") {
  CHECK_THROWS_WITH_AS(config::parse_config(json::parse(R"({"grid": {"nx": 60, "nz": 4}})")),
                       doctest::Contains("grid.nz"), config::ConfigError);
  CHECK_THROWS_WITH_AS(config::parse_config(json::parse(R"({"integrator": {"rtol": "tight"}})")),
                       doctest::Contains("integrator.rtol"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config(json::parse(R"({"mode": "fast"})")), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config(json::parse(R"({"grid": {"nx": 61}})")), config::ConfigError);
}

TEST_CASE("configurations round-trip through JSON") {
  const auto c = config::parse_config(json::parse(R"({
    "mode": "pod",
    "grid": {"nx": 40, "ny": 32},
    "evaporation": {"v_b": 0.05, "peaks": [{"a": 1.5, "center": [0.2, 0.0], "widths": [0.3, 0.6]}]},
    "pod": {"tau": 0.25, "ranks": {"h": 10, "p": 12, "c": 10, "f": 10}}
  })"));
  const auto back = config::parse_config(config::to_json(c));
  CHECK(config::to_json(back) == config::to_json(c));
  CHECK(back.pod.effective_ranks().p == 12);
  CHECK(back.evaporation.peaks[0].y_w == 0.6);
}

TEST_CASE("sweep axes rewrite the base configuration") {
  const auto sw = config::parse_sweep(json::parse(R"({
    "base": {"evaporation": {"peaks": [
      {"a": 1, "center": [-1.5, 0], "widths": [0.5, 0.5]},
      {"a": 1, "center": [1.5, 0], "widths": [0.5, 0.5]}]}},
    "axis": {"name": "x_k", "values": [0.6, 0.8]}
  })"));
  const auto c = config::apply_axis(sw.base, sw.axis, 0.8);
  CHECK(c.evaporation.peaks[0].x == -0.8);
  CHECK(c.evaporation.peaks[1].x == 0.8);
  config::SweepAxis fp{"x_w_fixed_product", {0.25}, 0.25};
  const auto e = config::apply_axis(config::RunConfig{}, fp, 0.25);
  CHECK(e.evaporation.peaks[0].x_w == 0.25);
  CHECK(e.evaporation.peaks[0].y_w == doctest::Approx(1.0));
  CHECK_THROWS_AS(config::apply_axis(config::RunConfig{}, {"z_w", {1.0}, 0.25}, 1.0), config::ConfigError);
}

}
