#include "lcm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lcm/allocate.hpp"
#include "lcm/ascii_grid.hpp"
#include "lcm/classify.hpp"
#include "lcm/criteria.hpp"
#include "lcm/csv.hpp"
#include "lcm/error.hpp"
#include "lcm/indices.hpp"
#include "lcm/markov.hpp"
#include "lcm/mce.hpp"
#include "lcm/mlp.hpp"
#include "lcm/preprocess.hpp"

namespace lcm {

namespace {

// Output tree helpers.
struct Out {
  fs::path root;

  fs::path path(const std::string& rel) const {
    const fs::path p = root / rel;
    fs::create_directories(p.parent_path());
    return p;
  }
  fs::path input(const std::string& rel, const std::string& producer) const {
    const fs::path p = root / rel;
    if (!fs::exists(p)) {
      throw DataError("missing " + rel + " in the output directory; run '" + producer + "' first");
    }
    return p;
  }
  void text(const std::string& rel, const std::string& contents) const {
    write_text_file(path(rel), contents);
  }
  void grid(const std::string& rel, const Grid& g) const { write_ascii_grid(g, path(rel)); }
  void map(const std::string& rel, const LandCoverMap& m) const {
    write_ascii_grid(m.grid(), path(rel + ".asc"));
    write_ppm(render_land_cover(m), path(rel + ".ppm"));
  }
};

std::string fmt(double v) { return format_number(v); }

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

std::string date_tag(double date) { return format_number(date); }

LandCoverMap load_map(const DatedMap& d, const Legend& legend) {
  return read_land_cover(d.path, legend, date_tag(d.date));
}

std::vector<int> legend_ids(const Legend& legend) {
  std::vector<int> ids;
  for (const auto& [id, name] : legend) ids.push_back(id);
  return ids;
}

double projection_span(const MapsConfig& m) { return m.t_next.date - m.t_curr.date; }

int ca_iterations(const PipelineConfig& c) {
  if (c.ca.iterations > 0) return c.ca.iterations;
  return static_cast<int>(std::max(1L, std::lround(projection_span(c.require_maps()))));
}

int focal_class(const PipelineConfig& c, const Legend& legend) {
  return c.mlp.focal_class ? *c.mlp.focal_class : legend.rbegin()->first;
}

std::string matrix_text(const std::vector<int>& ids, const std::vector<double>& values,
                        int digits) {
  std::ostringstream o;
  o << "  from\\to";
  for (int id : ids) o << "\t" << id;
  o << "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    o << "  " << ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) o << "\t" << fixed(values[i * ids.size() + j], digits);
    o << "\n";
  }
  return o.str();
}

std::string format_expected_transitions_csv(const ExpectedTransitions& et) {
  std::string out = "from";
  for (int id : et.class_ids) out += "," + std::to_string(id);
  out += "\n";
  for (std::size_t i = 0; i < et.order(); ++i) {
    out += std::to_string(et.class_ids[i]);
    for (std::size_t j = 0; j < et.order(); ++j) out += "," + fmt(et.at(i, j));
    out += "\n";
  }
  return out;
}

ExpectedTransitions read_expected_transitions_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  ExpectedTransitions et;
  if (t.header.empty() || t.header[0] != "from") {
    throw DataError(path.string() + ": expected header 'from,<ids>'");
  }
  for (std::size_t k = 1; k < t.header.size(); ++k) {
    et.class_ids.push_back(parse_int(t.header[k], path.string() + " header"));
  }
  if (t.rows.size() != et.order()) throw DataError(path.string() + ": row count differs from header");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string ctx = path.string() + " line " + std::to_string(t.line_numbers[i]);
    if (parse_int(t.rows[i][0], ctx) != et.class_ids[i]) throw DataError(ctx + ": row id out of order");
    for (std::size_t j = 1; j < t.rows[i].size(); ++j) et.values.push_back(parse_number(t.rows[i][j], ctx));
  }
  return et;
}

std::vector<Grid> load_criteria(const PipelineConfig& c, const Out& out) {
  std::vector<Grid> grids;
  for (const auto& cc : c.criteria) {
    grids.push_back(read_ascii_grid(out.input("criteria/" + cc.name + ".asc", "criteria")));
  }
  return grids;
}

const Grid& criterion_by_name(const PipelineConfig& c, const std::vector<Grid>& grids,
                              const std::string& name) {
  for (std::size_t k = 0; k < c.criteria.size(); ++k) {
    if (c.criteria[k].name == name) return grids[k];
  }
  throw ConfigError("undefined criterion '" + name + "'");
}

std::string stats_line(const Grid& g) {
  double lo = 0.0, hi = 0.0, sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_valid(i)) continue;
    if (n == 0) lo = hi = g[i];
    lo = std::min(lo, g[i]);
    hi = std::max(hi, g[i]);
    sum += g[i];
    ++n;
  }
  if (n == 0) return "no valid cells";
  return "min " + fixed(lo, 3) + ", max " + fixed(hi, 3) + ", mean " +
         fixed(sum / static_cast<double>(n), 3) + " over " + std::to_string(n) + " cells";
}

// ---- image stages ---------------------------------------------------------

MultiBandImage load_bands(const std::vector<std::pair<std::string, fs::path>>& bands) {
  std::vector<Grid> grids;
  std::vector<std::string> labels;
  for (const auto& [label, path] : bands) {
    grids.push_back(read_ascii_grid(path));
    labels.push_back(label);
  }
  return stack_bands(std::move(grids), std::move(labels));
}

void stage_preprocess(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (!c.preprocess) throw ConfigError("missing section [preprocess]");
  const auto& p = *c.preprocess;
  const MultiBandImage image = load_bands(p.bands);
  const BinaryMask reference =
      p.dark_mask ? read_mask(*p.dark_mask) : BinaryMask::filled(image.geometry(), true);
  const auto dark = dark_object_values(image, reference, p.percentile);
  const MultiBandImage corrected = dos_correct(image, dark);
  for (std::size_t b = 0; b < corrected.band_count(); ++b) {
    out.grid("preprocess/" + corrected.labels()[b] + ".asc", corrected.band(b));
  }
  const BandStats stats = band_statistics(corrected);
  out.text("preprocess/dark_values.csv", format_dark_values_csv(image, dark));
  out.text("preprocess/band_stats.csv", format_band_stats_csv(stats));
  out.text("preprocess/correlation.csv", format_correlation_csv(stats));
  std::ostringstream s;
  s << "Dark-object subtraction (percentile " << fmt(p.percentile) << ", reference "
    << (p.dark_mask ? "mask" : "all pixels") << ")\n";
  for (std::size_t b = 0; b < stats.band_count(); ++b) {
    s << "  " << stats.labels[b] << ": dark " << fmt(dark[b]) << ", mean " << fixed(stats.mean[b], 4)
      << ", sd " << fixed(stats.std_dev[b], 4) << "\n";
  }
  r.section = s.str();
}

void stage_oif(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (!c.preprocess) throw ConfigError("missing section [preprocess]");
  std::vector<std::pair<std::string, fs::path>> bands;
  for (const auto& [label, path] : c.preprocess->bands) {
    bands.emplace_back(label, out.input("preprocess/" + label + ".asc", "preprocess"));
  }
  const MultiBandImage image = load_bands(bands);
  if (image.band_count() < 3) throw DataError("OIF needs at least three bands");
  const BandStats stats = band_statistics(image);
  std::vector<std::size_t> idx(image.band_count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const OifRanking ranking = oif_rank(stats, idx);
  out.text("oif/oif.csv", format_oif_csv(ranking));
  std::ostringstream s;
  s << "Optimum Index Factor, best composites\n";
  for (std::size_t k = 0; k < std::min<std::size_t>(5, ranking.size()); ++k) {
    const auto& e = ranking[k];
    s << "  " << stats.labels[e.bands[0]] << "-" << stats.labels[e.bands[1]] << "-"
      << stats.labels[e.bands[2]] << ": " << fixed(e.oif, 4) << "\n";
  }
  r.section = s.str();
}

void stage_indices(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (!c.indices) throw ConfigError("missing section [indices]");
  const auto& ic = *c.indices;
  const Grid red = read_ascii_grid(ic.red), nir = read_ascii_grid(ic.nir),
             mir = read_ascii_grid(ic.mir);
  const Grid ndvi = normalized_difference(nir, red);
  const Grid ndii = normalized_difference(nir, mir);
  const Grid m = ndim(ndvi, ndii, ic.ndvi_weight);
  out.grid("indices/ndvi.asc", ndvi);
  out.grid("indices/ndii.asc", ndii);
  out.grid("indices/ndim.asc", m);
  r.section = "Spectral indices (NDIm weight " + fmt(ic.ndvi_weight) + ")\n  NDVI: " +
              stats_line(ndvi) + "\n  NDII: " + stats_line(ndii) + "\n  NDIm: " + stats_line(m) +
              "\n";
}

void stage_change(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (!c.change) throw ConfigError("missing section [change]");
  const auto& ch = *c.change;
  std::vector<Grid> levels;
  std::string thresholds = "date,low,high\n";
  std::ostringstream s;
  s << "Three-date change composite\n";
  for (std::size_t k = 0; k < 3; ++k) {
    const Grid g = read_ascii_grid(ch.ndim[k]);
    const auto t = quantile_thresholds(g, ch.low_fraction, ch.high_fraction);
    thresholds += std::to_string(k + 1) + "," + fmt(t.low) + "," + fmt(t.high) + "\n";
    s << "  date " << k + 1 << ": thresholds " << fixed(t.low, 4) << " / " << fixed(t.high, 4) << "\n";
    levels.push_back(ternarize(g, t));
  }
  const ChangeComposite comp = change_composite(levels[0], levels[1], levels[2]);
  const DynamicsGrouping grouping =
      ch.grouping ? DynamicsGrouping::read_csv(*ch.grouping) : DynamicsGrouping::standard();
  const LandCoverMap dynamics = group_dynamics(comp.codes, grouping);
  out.text("change/thresholds.csv", thresholds);
  out.grid("change/codes.asc", comp.codes);
  write_ppm(comp.image, out.path("change/composite.ppm"));
  out.map("change/dynamics", dynamics);
  write_legend(dynamics.legend(), out.path("change/dynamics_legend.csv"));
  out.text("change/grouping.csv", grouping.to_csv());
  for (const auto& [id, n] : dynamics.class_counts()) {
    s << "  " << dynamics.legend().at(id) << ": " << n << " pixels\n";
  }
  r.section = s.str();
}

void stage_classify(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (!c.classify) throw ConfigError("missing section [classify]");
  const auto& cl = *c.classify;
  const MultiBandImage image = load_bands(cl.bands);
  const Legend legend = read_legend(cl.legend);
  const LandCoverMap training = read_land_cover(cl.training, legend, "training");
  const SignatureSet sig = estimate_signatures(image, training);
  const MaxLikeResult ml =
      maxlike(image, sig, cl.priors == "equal" ? PriorMode::equal : PriorMode::empirical);
  const IcmResult ic = icm(ml.map, ml.scores, {cl.beta, cl.sweeps});
  out.text("classify/signatures.csv", format_signatures_csv(sig));
  out.map("classify/maxlike", ml.map);
  out.map("classify/classified", ic.map);
  std::string obj = "sweep,objective\n";
  for (std::size_t k = 0; k < ic.objective.size(); ++k) {
    obj += std::to_string(k) + "," + fmt(static_cast<double>(ic.objective[k])) + "\n";
  }
  out.text("classify/icm_objective.csv", obj);
  std::ostringstream s;
  s << "Maximum likelihood + ICM (beta " << fmt(cl.beta) << ", " << ic.sweeps << " sweeps, "
    << cl.priors << " priors)\n";
  if (cl.reference) {
    const LandCoverMap ref = read_land_cover(*cl.reference, legend, "reference");
    for (const auto& [name, map] : {std::pair{"maxlike", &ml.map}, std::pair{"icm", &ic.map}}) {
      const ConfusionMatrix cm = confusion(*map, ref);
      out.text(std::string("classify/confusion_") + name + ".csv", format_confusion_csv(cm));
      s << "  " << name << ": overall accuracy " << fixed(overall_accuracy(cm), 4) << ", kappa "
        << fixed(kappa(cm), 4) << "\n";
    }
  }
  r.section = s.str();
}

// ---- calibrate / predict / validate ----------------------------------------

void stage_criteria(const PipelineConfig& c, const Out& out, StageResult& r) {
  if (c.criteria.empty()) throw ConfigError("no [criterion:<name>] sections");
  std::ostringstream s;
  s << "Criteria\n";
  for (const auto& cc : c.criteria) {
    Grid g;
    if (cc.distance) {
      g = distance_transform(read_mask(cc.path));
    } else {
      g = read_ascii_grid(cc.path);
    }
    out.grid("criteria/" + cc.name + ".asc", g);
    s << "  " << cc.name << (cc.distance ? " (distance)" : "") << ": " << stats_line(g) << "\n";
  }
  r.section = s.str();
}

void stage_mce(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap base = load_map(maps.t_curr, legend);
  const std::vector<Grid> criteria = load_criteria(c, out);
  std::ostringstream s;
  s << "Suitability (multi-criteria evaluation)\n";
  for (int id : legend_ids(legend)) {
    const auto it = std::find_if(c.suitability.begin(), c.suitability.end(),
                                 [&](const auto& sc) { return sc.class_id == id; });
    const std::string file = "mce/suitability_" + std::to_string(id) + ".asc";
    if (it == c.suitability.end()) {
      out.grid(file, Grid::filled(base.geometry(), 255.0));
      s << "  class " << id << " (" << legend.at(id) << "): uniform 255\n";
      continue;
    }
    const SuitabilityConfig& sc = *it;
    if (legend.count(sc.class_id) == 0) {
      throw ConfigError("[suitability:" + std::to_string(sc.class_id) + "] class not in legend");
    }
    std::vector<Grid> factors;
    for (const auto& f : sc.factors) {
      const Grid& g = criterion_by_name(c, criteria, f.criterion);
      require_same_frame(base.geometry(), g.geometry(), "criterion " + f.criterion + " vs maps");
      factors.push_back(f.fuzzy ? fuzzy_standardize(g, *f.fuzzy) : reclass(g, f.reclass));
    }
    WeightSet ws;
    ws.weights = {1.0};
    if (sc.saaty) {
      const SaatyMatrix m = SaatyMatrix::read_csv(*sc.saaty);
      if (static_cast<std::size_t>(m.order()) != sc.factors.size()) {
        throw ConfigError("Saaty matrix for class " + std::to_string(id) + " has order " +
                          std::to_string(m.order()) + " but " + std::to_string(sc.factors.size()) +
                          " factors");
      }
      ws = saaty_weights(m);
      if (!ws.consistent_enough()) {
        r.warnings.push_back("class " + std::to_string(id) + ": consistency ratio " +
                             fixed(ws.consistency_ratio, 4) + " exceeds 0.10");
      }
    }
    std::vector<BinaryMask> constraints;
    for (const auto& k : sc.constraints) {
      constraints.push_back(make_constraint(criterion_by_name(c, criteria, k.criterion),
                                            parse_constraint_predicate(k.predicate)));
    }
    const Grid suit = sc.order_weights.empty()
                          ? wlc(factors, ws.weights, constraints)
                          : owa(factors, ws.weights, sc.order_weights, constraints);
    out.grid(file, suit);
    std::string csv = "# lambda_max=" + fmt(ws.lambda_max) + "\n# consistency_index=" +
                      fmt(ws.consistency_index) + "\n# consistency_ratio=" +
                      fmt(ws.consistency_ratio) + "\nfactor,weight\n";
    s << "  class " << id << " (" << legend.at(id) << "):";
    for (std::size_t k = 0; k < sc.factors.size(); ++k) {
      csv += sc.factors[k].criterion + "," + fmt(ws.weights[k]) + "\n";
      s << " " << sc.factors[k].criterion << " " << fixed(ws.weights[k], 4);
    }
    out.text("mce/weights_" + std::to_string(id) + ".csv", csv);
    s << "; CR " << fixed(ws.consistency_ratio, 4) << (sc.order_weights.empty() ? ", WLC" : ", OWA")
      << "; " << stats_line(suit) << "\n";
  }
  r.section = s.str();
}

void stage_markov(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap prev = load_map(maps.t_prev, legend);
  const LandCoverMap curr = load_map(maps.t_curr, legend);
  std::optional<BinaryMask> mask;
  if (maps.mask) mask = read_mask(*maps.mask);
  const CountMatrix counts = crosstab(prev, curr, mask ? &*mask : nullptr);
  const TransitionMatrix tm = transition_probabilities(counts, maps.t_curr.date - maps.t_prev.date);
  const TransitionMatrix projected = scale_transition(tm, projection_span(maps));
  out.text("markov/counts.csv", format_counts_csv(counts));
  out.text("markov/transition.csv", format_transition_csv(tm));
  out.text("markov/transition_projected.csv", format_transition_csv(projected));

  ExpectedTransitions et;
  std::vector<Grid> probs;
  std::ostringstream s;
  s << "Markov chain (order " << c.markov.order << ")\n  calibration " << date_tag(maps.t_prev.date)
    << " -> " << date_tag(maps.t_curr.date) << ", projection " << date_tag(maps.t_curr.date)
    << " -> " << date_tag(maps.t_next.date) << "\n  transition probabilities over "
    << fmt(tm.time_span) << " years:\n"
    << matrix_text(tm.class_ids, tm.probs, 4) << "  rescaled to " << fmt(projected.time_span)
    << " years:\n"
    << matrix_text(projected.class_ids, projected.probs, 4);
  if (c.markov.order == 2) {
    const LandCoverMap prev2 = load_map(*maps.t_prev2, legend);
    const SecondOrderTable table = second_order_transitions(prev2, prev, curr);
    out.text("markov/second_order.csv", format_second_order_csv(table));
    et = expected_transitions(prev, curr, table);
    probs = conditional_probability_maps(prev, curr, table);
    std::size_t fallback = 0;
    for (bool f : table.fallback) fallback += f ? 1 : 0;
    s << "  second-order table from " << date_tag(maps.t_prev2->date) << ", "
      << date_tag(maps.t_prev.date) << ", " << date_tag(maps.t_curr.date) << "; " << fallback
      << " unobserved histories use first-order rows\n";
    if (fallback > 0) {
      r.warnings.push_back(std::to_string(fallback) + " class histories were never observed");
    }
  } else {
    et = expected_transitions(curr, projected);
    probs = conditional_probability_maps(curr, projected);
  }
  for (std::size_t k = 0; k < probs.size(); ++k) {
    out.grid("markov/probability_" + std::to_string(et.class_ids[k]) + ".asc", probs[k]);
  }
  const ExpectedAreas areas = expected_areas(et);
  out.text("markov/expected_transitions.csv", format_expected_transitions_csv(et));
  out.text("markov/expected_areas.csv", format_expected_areas_csv(areas));
  s << "  expected areas (pixels):\n";
  for (std::size_t k = 0; k < areas.class_ids.size(); ++k) {
    s << "    " << areas.class_ids[k] << " " << legend.at(areas.class_ids[k]) << ": "
      << areas.current[k] << " -> " << fixed(areas.expected[k], 2) << " (allocated "
      << areas.allocated[k] << ")\n";
  }
  r.section = s.str();
}

std::vector<Grid> load_suitabilities(const Out& out, const std::vector<int>& ids) {
  std::vector<Grid> suit;
  for (int id : ids) {
    suit.push_back(
        read_ascii_grid(out.input("mce/suitability_" + std::to_string(id) + ".asc", "mce")));
  }
  return suit;
}

void stage_predict(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap curr = load_map(maps.t_curr, legend);
  const ExpectedTransitions et =
      read_expected_transitions_csv(out.input("markov/expected_transitions.csv", "markov"));
  const std::vector<Grid> suit = load_suitabilities(out, et.class_ids);
  CaParams params;
  params.kernel_size = c.ca.kernel;
  params.iterations = ca_iterations(c);
  const CaResult res = ca_markov(curr, et, suit, params);
  LandCoverMap predicted(res.map.grid(), legend, date_tag(maps.t_next.date));
  out.map("predict/ca_markov", predicted);
  out.text("predict/change_log.csv", format_change_log_csv(res.log));
  std::vector<double> realised(res.transitions.begin(), res.transitions.end());
  ExpectedTransitions rt{res.class_ids, realised};
  out.text("predict/transitions.csv", format_expected_transitions_csv(rt));
  std::ostringstream s;
  s << "CA-Markov allocation (" << params.iterations << " iterations, " << params.kernel_size << "x"
    << params.kernel_size << " contiguity kernel, floor " << fmt(params.contiguity_floor) << ")\n";
  s << "  allocated transitions (pixels):\n"
    << matrix_text(res.class_ids, realised, 0);
  s << "  clumping index: base " << fixed(clumping_index(curr), 4) << ", predicted "
    << fixed(clumping_index(predicted), 4) << "\n";
  r.section = s.str();
}

void stage_mlp_train(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap prev = load_map(maps.t_prev, legend);
  const LandCoverMap curr = load_map(maps.t_curr, legend);
  const std::vector<Grid> criteria = load_criteria(c, out);
  const int focal = focal_class(c, legend);
  SampleSet samples = build_samples(prev, curr, criteria, focal);
  for (auto& w : samples.warnings) r.warnings.push_back(w);
  const MlpModel init = init_model(samples.features.n_inputs(), c.mlp.hidden, c.seed);
  const TrainResult tr = train(init, samples.data, c.mlp.learning_rate, c.mlp.epochs);
  const double final_mse = mean_squared_error(tr.model, samples.data);
  out.text("mlp/model.txt", format_model(tr.model, samples.features));
  out.text("mlp/loss.csv", format_loss_csv(tr.loss));
  std::ostringstream s;
  s << "Perceptron training (" << samples.features.n_inputs() << " inputs, " << c.mlp.hidden
    << " hidden units, learning rate " << fmt(c.mlp.learning_rate) << ", " << c.mlp.epochs
    << " epochs, seed " << c.seed << ")\n  focal class " << focal << " (" << legend.at(focal)
    << "), " << samples.data.size() << " samples from " << date_tag(maps.t_prev.date) << " -> "
    << date_tag(maps.t_curr.date) << "\n  mse: initial "
    << fixed(tr.loss.empty() ? final_mse : tr.loss.front(), 6) << ", final " << fixed(final_mse, 6)
    << "\n";
  r.section = s.str();
}

void stage_mlp_predict(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap curr = load_map(maps.t_curr, legend);
  const std::vector<Grid> criteria = load_criteria(c, out);
  const auto [model, features] = read_model(out.input("mlp/model.txt", "mlp-train"));
  const MlpPrediction p = predict_map(model, features, curr, criteria, c.mlp.threshold);
  out.grid("mlp/probability.asc", p.probability);
  const LandCoverMap predicted(p.map.grid(), legend, date_tag(maps.t_next.date));
  out.map("mlp/predicted", predicted);
  std::ostringstream s;
  s << "Perceptron prediction (threshold " << fmt(c.mlp.threshold) << ")\n  probability: "
    << stats_line(p.probability) << "\n";
  for (const auto& [id, n] : predicted.class_counts()) {
    s << "  " << id << " " << legend.at(id) << ": " << n << " pixels\n";
  }
  r.section = s.str();
}

// Same transition counts per host class as `predicted`, placed at random host pixels.
LandCoverMap random_allocation(const LandCoverMap& base, const LandCoverMap& predicted,
                               std::uint64_t seed) {
  const CountMatrix moves = crosstab(base, predicted);
  const std::size_t n = moves.order();
  std::vector<std::vector<std::size_t>> hosts(n);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!base.is_valid(i) || !predicted.is_valid(i)) continue;
    hosts[static_cast<std::size_t>(
              std::lower_bound(moves.class_ids.begin(), moves.class_ids.end(), base.class_at(i)) -
              moves.class_ids.begin())]
        .push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<double> out(base.size(), base.geometry().nodata);
  for (std::size_t h = 0; h < n; ++h) {
    std::shuffle(hosts[h].begin(), hosts[h].end(), rng);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::int64_t k = 0; k < moves.at(h, j); ++k) out[hosts[h][pos++]] = moves.class_ids[j];
    }
  }
  return LandCoverMap(Grid(base.geometry(), std::move(out)), base.legend(), "random");
}

void stage_validate(const PipelineConfig& c, const Out& out, StageResult& r) {
  const auto& maps = c.require_maps();
  const Legend legend = read_legend(maps.legend);
  const LandCoverMap curr = load_map(maps.t_curr, legend);
  const LandCoverMap held = load_map(maps.t_next, legend);
  std::optional<BinaryMask> mask;
  if (maps.mask) mask = read_mask(*maps.mask);
  const BinaryMask* mk = mask ? &*mask : nullptr;
  require_same_frame(curr.geometry(), held.geometry(), "held-out map vs base map");

  std::vector<std::pair<std::string, std::string>> models;
  if (c.runs_ca()) models.emplace_back("ca_markov", "predict/ca_markov.asc");
  if (c.runs_mlp()) models.emplace_back("mlp", "mlp/predicted.asc");

  std::string summary = "metric,value\n";
  auto metric = [&](const std::string& key, double v) { summary += key + "," + fmt(v) + "\n"; };
  std::ostringstream s;
  s << "Validation against held-out " << date_tag(maps.t_next.date) << "\n";
  const ConfusionMatrix persist = confusion(curr, held, mk);
  metric("kappa_persistence", kappa(persist));
  s << "  persistence baseline (no change): kappa " << fixed(kappa(persist), 4) << "\n";

  std::vector<LandCoverMap> predictions;
  for (const auto& [name, rel] : models) {
    const std::string producer = name == "mlp" ? "mlp-predict" : "predict";
    const Grid g = read_ascii_grid(out.input(rel, producer));
    require_same_frame(held.geometry(), g.geometry(), "held-out map vs " + name + " prediction");
    const LandCoverMap pred(g, legend, date_tag(maps.t_next.date));
    const ConfusionMatrix cm = confusion(pred, held, mk);
    const double k = kappa(cm), oa = overall_accuracy(cm);
    const LandCoverMap baseline = random_allocation(curr, pred, c.seed);
    const double kb = kappa(confusion(baseline, held, mk));
    const Residuals res = residual_map(pred, held);
    out.text("validate/confusion_" + name + ".csv", format_confusion_csv(cm));
    out.grid("validate/residual_" + name + ".asc", res.disagreement.to_grid());
    metric("kappa_" + name, k);
    metric("overall_accuracy_" + name, oa);
    metric("kappa_random_" + name, kb);
    metric("kappa_gain_" + name, k - kb);
    metric("disagreement_pixels_" + name, static_cast<double>(res.disagreement.count()));
    s << "  " << name << ": kappa " << fixed(k, 4) << ", overall accuracy " << fixed(oa, 4)
      << ", random-allocation kappa " << fixed(kb, 4) << ", residual pixels "
      << res.disagreement.count() << "\n    producer accuracy:";
    for (const auto& [id, pa] : res.producer_accuracy) s << " " << id << "=" << fixed(pa, 4);
    s << "\n";
    predictions.push_back(pred);
  }
  s << "  areas (pixels): class, " << date_tag(maps.t_curr.date) << ", held-out";
  for (const auto& m : models) s << ", " << m.first;
  s << "\n";
  const auto cc = curr.class_counts(), hc = held.class_counts();
  for (const auto& [id, name] : legend) {
    s << "    " << id << " " << name << ": " << cc.at(id) << ", " << hc.at(id);
    for (const auto& p : predictions) s << ", " << p.class_counts().at(id);
    s << "\n";
  }
  if (predictions.size() == 2) {
    const ConfusionMatrix cm = confusion(predictions[1], predictions[0], mk);
    const double agree = overall_accuracy(cm);
    const Residuals diff = residual_map(predictions[1], predictions[0]);
    out.grid("validate/model_disagreement.asc", diff.disagreement.to_grid());
    metric("model_agreement", agree);
    s << "  ca_markov vs mlp: agreement " << fixed(agree, 4) << ", " << diff.disagreement.count()
      << " pixels differ\n";
  }
  out.text("report/summary.csv", summary);
  r.section = s.str();
}

using StageFn = void (*)(const PipelineConfig&, const Out&, StageResult&);

StageFn stage_function(const std::string& name) {
  static const std::map<std::string, StageFn> table{
      {"preprocess", stage_preprocess}, {"oif", stage_oif},
      {"indices", stage_indices},       {"change", stage_change},
      {"classify", stage_classify},     {"criteria", stage_criteria},
      {"mce", stage_mce},               {"markov", stage_markov},
      {"predict", stage_predict},       {"mlp-train", stage_mlp_train},
      {"mlp-predict", stage_mlp_predict}, {"validate", stage_validate}};
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown stage '" + name + "'");
  return it->second;
}

[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage) {
  const std::string msg = stage + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::config: throw ConfigError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::numerical: throw NumericalError(msg);
  }
  throw DataError(msg);
}

std::string section_file(const std::string& stage) { return "report/sections/" + stage + ".txt"; }

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"preprocess", "oif",       "indices",   "change",
                                              "classify",   "criteria",  "mce",       "markov",
                                              "predict",    "mlp-train", "mlp-predict", "validate"};
  return names;
}

std::vector<std::string> run_stage_sequence(const PipelineConfig& c) {
  std::vector<std::string> seq{"criteria", "mce", "markov"};
  if (c.runs_ca()) seq.push_back("predict");
  if (c.runs_mlp()) {
    seq.push_back("mlp-train");
    seq.push_back("mlp-predict");
  }
  seq.push_back("validate");
  return seq;
}

StageResult run_stage(const std::string& stage, const PipelineConfig& config) {
  const StageFn fn = stage_function(stage);
  const Out out{config.output_dir};
  StageResult r;
  r.stage = stage;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn(config, out, r);
  } catch (const Error& e) {
    rethrow_with_stage(e, stage);
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(stage + ": " + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string section = "== " + stage + " ==\n" + r.section;
  for (const auto& w : r.warnings) section += "  warning: " + w + "\n";
  out.text(section_file(stage), section);
  // Wall-clock time varies between runs, so it lives outside the report.
  out.text("timings/" + stage + ".csv", "stage,seconds\n" + stage + "," + fixed(r.seconds, 6) + "\n");
  if (stage == "validate") {
    std::string text = "Land change run report\n\n-- configuration --\n" + echo_config(config) + "\n";
    for (const auto& st : run_stage_sequence(config)) {
      text += read_text_file(out.input(section_file(st), st)) + "\n";
    }
    out.text("report/report.txt", text);
  }
  return r;
}

RunReport run_calibrate_predict_validate(const PipelineConfig& config) {
  RunReport report;
  for (const auto& stage : run_stage_sequence(config)) {
    report.stages.push_back(run_stage(stage, config));
  }
  std::string timings = "stage,seconds\n";
  for (const auto& st : report.stages) timings += st.stage + "," + fixed(st.seconds, 6) + "\n";
  Out{config.output_dir}.text("timings/run.csv", timings);
  report.text = read_text_file(config.output_dir / "report/report.txt");
  report.metrics = read_summary(config.output_dir);
  return report;
}

std::map<std::string, double> read_summary(const fs::path& output_dir) {
  const CsvTable t = read_csv(output_dir / "report/summary.csv");
  std::map<std::string, double> m;
  for (const auto& row : t.rows) m[row[0]] = parse_number(row[1], "summary.csv");
  return m;
}

SynthSpec synth_spec_from_config(const PipelineConfig& c) {
  SynthSpec s = default_synth_spec();
  s.rows = c.synth.rows;
  s.cols = c.synth.cols;
  s.patches = c.synth.patches;
  s.dates = c.synth.dates;
  s.seed = c.seed;
  return s;
}

SynthLandscape write_synthetic_scenario(const SynthSpec& spec, const fs::path& dir) {
  const SynthLandscape l = generate_synthetic_landscape(spec);
  write_synthetic_landscape(l, spec, dir);
  const auto range = [](const Grid& g) {
    const auto v = g.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::pair{*lo, *hi};
  };
  const auto [road_lo, road_hi] = range(l.criteria[0]);
  const auto [river_lo, river_hi] = range(l.criteria[1]);
  const auto [elev_lo, elev_hi] = range(l.criteria[2]);
  // Road access three times as important as river access.
  write_text_file(dir / "saaty_clearing.csv", "1,3\n1/3,1\n");

  const std::size_t n = spec.dates.size();
  const auto map_file = [&](std::size_t k) { return "map_" + format_number(spec.dates[k]) + ".asc"; };
  std::ostringstream ini;
  ini << "[run]\noutput = out\nseed = " << spec.seed << "\nmodel = both\n\n[maps]\nlegend = legend.csv\n";
  const auto put = [&](const char* key, std::size_t k) {
    ini << key << " = " << map_file(k) << "\n" << key << "_date = " << format_number(spec.dates[k]) << "\n";
  };
  if (n >= 4) put("t_prev2", n - 4);
  if (n >= 3) {
    put("t_prev", n - 3);
    put("t_curr", n - 2);
    put("t_next", n - 1);
  }
  const int ids[3] = {spec.legend.begin()->first, std::next(spec.legend.begin())->first,
                      spec.legend.rbegin()->first};
  ini << "\n[criterion:dist_road]\ndistance_to = roads.asc\n"
      << "\n[criterion:dist_river]\ndistance_to = rivers.asc\n"
      << "\n[criterion:elevation]\nsource = elevation.asc\n"
      << "\n[suitability:" << ids[0] << "]\nfactors = elevation\nfuzzy_elevation = linear,increasing,"
      << format_number(elev_lo) << "," << format_number(elev_hi) << "\n"
      << "\n[suitability:" << ids[1] << "]\nfactors = dist_road\nfuzzy_dist_road = linear,increasing,"
      << format_number(road_lo) << "," << format_number(road_hi) << "\n"
      << "\n[suitability:" << ids[2] << "]\nfactors = dist_road,dist_river\n"
      << "fuzzy_dist_road = linear,decreasing," << format_number(road_lo) << ","
      << format_number(road_hi) << "\nfuzzy_dist_river = linear,decreasing,"
      << format_number(river_lo) << "," << format_number(river_hi)
      << "\nsaaty = saaty_clearing.csv\n"
      << "\n[markov]\norder = 1\n\n[ca]\nkernel = 5\n"
      << "\n[mlp]\nhidden = 8\nlearning_rate = 2\nepochs = 1000\nfocal_class = " << ids[2]
      << "\nthreshold = 0.5\n";
  if (n >= 3 && spec.legend.size() >= 3) write_text_file(dir / "scenario.ini", ini.str());
  return l;
}

}  // namespace lcm
