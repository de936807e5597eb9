#include <doctest.h>

#include <algorithm>
#include <map>

#include "lcm/ascii_grid.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/pipeline.hpp"
#include "test_util.hpp"

using namespace lcm;
namespace fs = std::filesystem;

namespace {

fs::path make_scenario(const std::string& name, int size = 40) {
  const auto dir = testutil::scratch(name);
  SynthSpec spec = default_synth_spec();
  spec.rows = spec.cols = size;
  spec.patches = 12;
  write_synthetic_scenario(spec, dir);
  return dir;
}

PipelineConfig config_at(const fs::path& dir, const fs::path& out) {
  PipelineConfig c = load_config(dir / "scenario.ini");
  c.output_dir = out;
  c.mlp.epochs = 200;
  return c;
}

// Every output file except wall-clock timings, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel.rfind("timings/", 0) == 0) continue;
    out[rel] = read_text_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("runs are reproducible and chained stages equal the monolithic run") {
  const auto dir = make_scenario("pipeline_repro");
  const RunReport a = run_calibrate_predict_validate(config_at(dir, dir / "a"));
  run_calibrate_predict_validate(config_at(dir, dir / "b"));
  const auto sa = snapshot(dir / "a");
  CHECK(sa == snapshot(dir / "b"));
  CHECK(sa.count("report/report.txt"));
  CHECK(sa.count("report/summary.csv"));
  CHECK(fs::exists(dir / "a" / "timings"));

  const PipelineConfig chained = config_at(dir, dir / "c");
  for (const auto& stage : run_stage_sequence(chained)) run_stage(stage, chained);
  CHECK(snapshot(dir / "c") == sa);

  CHECK(a.metrics.count("kappa_ca_markov"));
  CHECK(a.metrics.count("kappa_mlp"));
  CHECK(a.metrics == read_summary(dir / "a"));
}

TEST_CASE("model selector both writes two predictions and a comparison") {
  const auto dir = make_scenario("pipeline_both");
  const RunReport r = run_calibrate_predict_validate(config_at(dir, dir / "out"));
  CHECK(fs::exists(dir / "out" / "predict" / "ca_markov.asc"));
  CHECK(fs::exists(dir / "out" / "mlp" / "predicted.asc"));
  CHECK(fs::exists(dir / "out" / "validate" / "model_disagreement.asc"));
  CHECK(r.metrics.count("model_agreement"));
  CHECK(r.text.find("kappa") != std::string::npos);

  PipelineConfig ca_only = config_at(dir, dir / "ca");
  ca_only.model = "ca_markov";
  const auto seq = run_stage_sequence(ca_only);
  CHECK(std::find(seq.begin(), seq.end(), "mlp-train") == seq.end());
  const RunReport c = run_calibrate_predict_validate(ca_only);
  CHECK_FALSE(c.metrics.count("model_agreement"));
  CHECK(c.metrics.at("kappa_ca_markov") == r.metrics.at("kappa_ca_markov"));
}

TEST_CASE("a held-out map on another grid fails in the validate stage") {
  const auto dir = make_scenario("pipeline_mismatch");
  Grid small = read_ascii_grid(dir / "map_2000.asc");
  GridGeometry g = small.geometry();
  g.rows -= 1;
  std::vector<double> v(small.values().begin(), small.values().begin() + static_cast<std::ptrdiff_t>(g.size()));
  write_ascii_grid(Grid(g, v), dir / "map_2000.asc");
  PipelineConfig c = config_at(dir, dir / "out");
  c.model = "ca_markov";
  try {
    run_calibrate_predict_validate(c);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("validate: ", 0) == 0);
  }
}

TEST_CASE("stage names") {
  const auto& names = stage_names();
  for (const char* s : {"preprocess", "oif", "indices", "change", "classify", "criteria", "mce",
                        "markov", "predict", "mlp-train", "mlp-predict", "validate"}) {
    CHECK(std::find(names.begin(), names.end(), s) != names.end());
  }
  const PipelineConfig c = config_at(make_scenario("pipeline_names", 16), "unused");
  CHECK_THROWS(run_stage("teleport", c));
}
