// Command-line front end for the land change modelling pipeline.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lcm/config.hpp"
#include "lcm/error.hpp"
#include "lcm/kernels.hpp"
#include "lcm/pipeline.hpp"
#include "lcm/synth.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

lcm::PipelineConfig load(const Options& o) {
  if (o.config.empty()) throw lcm::ConfigError("--config is required");
  lcm::PipelineConfig c = lcm::load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  return c;
}

void print_stage(const lcm::StageResult& r, bool quiet) {
  for (const auto& w : r.warnings) std::cerr << "warning (" << r.stage << "): " << w << "\n";
  if (!quiet) std::cout << r.section;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Land change modelling: classification, change detection, Markov chains, "
               "multi-criteria suitability, CA-Markov and perceptron prediction"};
  app.require_subcommand(1);
  Options opt;
  app.add_flag("--quiet,-q", opt.quiet, "Only print warnings and errors");

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config,-c", opt.config, "Configuration file (INI)");
    if (config_required) c->required();
    sub->add_option("--out,-o", opt.out, "Output directory (overrides [run] output)");
    sub->add_option("--seed", opt.seed, "Random seed (overrides [run] seed)");
    sub->add_flag("--quiet,-q", opt.quiet, "Only print warnings and errors");
  };

  const std::map<std::string, std::string> stages{
      {"preprocess", "Dark-object subtraction and band statistics"},
      {"oif", "Rank three-band composites by Optimum Index Factor"},
      {"indices", "NDVI, NDII and NDIm grids"},
      {"change", "Three-date ternary change composite and trajectory groups"},
      {"classify", "Maximum likelihood classification with ICM relaxation"},
      {"criteria", "Build criterion grids"},
      {"mce", "Per-class suitability by multi-criteria evaluation"},
      {"markov", "Transition matrices, expected areas and probability maps"},
      {"predict", "CA-Markov allocation of the projected change"},
      {"mlp-train", "Train the perceptron on the calibration pair"},
      {"mlp-predict", "Perceptron probability and predicted map"},
      {"validate", "Compare predictions with the held-out map; write the report"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : stages) {
    subs[name] = app.add_subcommand(name, help);
    add_common(subs[name], true);
  }
  auto* run = app.add_subcommand("run", "Calibrate, predict and validate in one go");
  add_common(run, true);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario with a ready config");
  add_common(synth, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!opt.quiet) {
      std::cerr << "kernels: " << lcm::kernels::isa_name(lcm::kernels::active_isa()) << "\n";
    }
    if (synth->parsed()) {
      lcm::SynthSpec spec = lcm::default_synth_spec();
      if (!opt.config.empty()) spec = lcm::synth_spec_from_config(lcm::load_config(opt.config));
      if (opt.seed) spec.seed = *opt.seed;
      const std::string dir = opt.out.empty() ? "synthetic" : opt.out;
      const auto l = lcm::write_synthetic_scenario(spec, dir);
      if (!opt.quiet) {
        std::cout << "wrote " << l.maps.size() << " maps and " << l.criteria.size()
                  << " criteria to " << dir << "\n";
      }
      return 0;
    }
    const lcm::PipelineConfig config = load(opt);
    if (run->parsed()) {
      const auto report = lcm::run_calibrate_predict_validate(config);
      for (const auto& st : report.stages) print_stage(st, opt.quiet);
      return 0;
    }
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) print_stage(lcm::run_stage(name, config), opt.quiet);
    }
    return 0;
  } catch (const lcm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lcm::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
