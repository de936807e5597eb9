#include <doctest.h>

#include "lcm/config.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/pipeline.hpp"
#include "test_util.hpp"

using namespace lcm;

namespace {

std::filesystem::path scenario() {
  static const auto dir = [] {
    const auto d = testutil::scratch("config_scenario");
    SynthSpec spec = default_synth_spec();
    spec.rows = spec.cols = 24;
    write_synthetic_scenario(spec, d);
    return d;
  }();
  return dir;
}

std::string base_text() { return read_text_file(scenario() / "scenario.ini"); }

std::string error_of(const std::string& text) {
  try {
    parse_config(text, scenario());
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("bundled scenario config loads") {
  const PipelineConfig c = load_config(scenario() / "scenario.ini");
  CHECK(c.model == "both");
  CHECK(c.runs_ca());
  CHECK(c.runs_mlp());
  CHECK(c.criteria.size() == 3);
  CHECK(c.suitability.size() == 3);
  CHECK(c.require_maps().t_next.date == 2000.0);
  CHECK(c.output_dir == scenario() / "out");
}

TEST_CASE("missing keys are named") {
  const std::string text = replace(base_text(), "t_curr = map_1992.asc\n", "");
  const std::string msg = error_of(text);
  CHECK(msg.find("t_curr") != std::string::npos);
  CHECK(msg.find("[maps]") != std::string::npos);
}

TEST_CASE("dates must increase") {
  const std::string text = replace(base_text(), "t_next_date = 2000", "t_next_date = 1990");
  CHECK(error_of(text).find("dates must increase") != std::string::npos);
}

TEST_CASE("unknown keys, sections and files are rejected") {
  CHECK(error_of(replace(base_text(), "[ca]\n", "[ca]\nkernal = 5\n")).find("kernal") != std::string::npos);
  CHECK(error_of(base_text() + "\n[extra]\na = 1\n").find("[extra]") != std::string::npos);
  CHECK(error_of(replace(base_text(), "roads.asc", "nowhere.asc")).find("file not found") !=
        std::string::npos);
  CHECK(error_of(replace(base_text(), "kernel = 5", "kernel = 4")).find("kernel") != std::string::npos);
  CHECK(error_of(replace(base_text(), "order = 1", "order = 2")).find("t_prev2") != std::string::npos);
  CHECK(error_of(replace(base_text(), "model = both", "model = neural")).find("model") !=
        std::string::npos);
  CHECK_THROWS_AS(load_config(scenario() / "absent.ini"), ConfigError);
}

TEST_CASE("echo fills defaults and parses back") {
  std::string text = replace(base_text(), "[ca]\nkernel = 5\n", "[ca]\n");
  text = replace(text, "threshold = 0.5\n", "");
  const PipelineConfig c = parse_config(text, scenario());
  CHECK(c.ca.kernel == 5);
  CHECK(c.mlp.threshold == 0.5);
  const std::string echo = echo_config(c);
  CHECK(echo.find("kernel = 5") != std::string::npos);
  CHECK(echo.find("iterations = 8") != std::string::npos);
  CHECK(echo.find("threshold = 0.5") != std::string::npos);
  CHECK(echo_config(parse_config(echo, scenario())) == echo);
}
