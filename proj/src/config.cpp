#include "lcm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

namespace pt = boost::property_tree;

namespace {

// One INI section; remembers which keys were read so leftovers can be reported.
class Section {
 public:
  Section(std::string name, const pt::ptree& tree, fs::path base)
      : name_(std::move(name)), base_(std::move(base)) {
    for (const auto& [key, child] : tree) {
      if (!child.empty()) throw ConfigError("[" + name_ + "] nested key '" + key + "'");
      if (!values_.emplace(key, trim(child.data())).second) {
        throw ConfigError("[" + name_ + "] duplicate key '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "' in [" + name_ + "]");
    used_.insert(key);
    return it->second;
  }
  std::optional<std::string> text_opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return text(key);
  }
  double number(const std::string& key) {
    try {
      return parse_number(text(key), key);
    } catch (const DataError& e) {
      throw ConfigError("[" + name_ + "] " + e.what());
    }
  }
  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  int integer(const std::string& key) {
    try {
      return parse_int(text(key), key);
    } catch (const DataError& e) {
      throw ConfigError("[" + name_ + "] " + e.what());
    }
  }
  int integer_or(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  fs::path file(const std::string& key) { return resolve(text(key), key); }
  std::optional<fs::path> file_opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return file(key);
  }
  fs::path resolve(const std::string& value, const std::string& key) const {
    fs::path p(value);
    if (p.is_relative()) p = base_ / p;
    p = p.lexically_normal();
    if (!fs::exists(p)) {
      throw ConfigError("[" + name_ + "] " + key + ": file not found: " + p.string());
    }
    return p;
  }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  fs::path base_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

std::vector<std::string> list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& item : split(text, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::pair<std::string, fs::path>> band_list(Section& s, const std::string& key) {
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& item : list(s.text(key))) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0) {
      throw ConfigError("[" + s.name() + "] " + key + ": expected label:path, got '" + item + "'");
    }
    out.emplace_back(trim(item.substr(0, colon)), s.resolve(trim(item.substr(colon + 1)), key));
  }
  if (out.empty()) throw ConfigError("[" + s.name() + "] " + key + " lists no bands");
  return out;
}

DatedMap dated(Section& s, const std::string& key) {
  return {s.file(key), s.number(key + "_date")};
}

}  // namespace

const MapsConfig& PipelineConfig::require_maps() const {
  if (!maps) throw ConfigError("missing section [maps]");
  return *maps;
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " +
                      e.message());
  }
  PipelineConfig c;
  std::set<std::string> criterion_names;
  std::set<int> suitability_classes;
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty()) {
      throw ConfigError("key '" + name + "' outside any section");
    }
    Section s(name, child, base_dir);
    if (name == "run") {
      if (s.has("output")) {
        fs::path out(s.text("output"));
        c.output_dir = out.is_relative() ? (base_dir / out).lexically_normal() : out;
      }
      if (s.has("seed")) {
        const auto seed = s.text("seed");
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), v);
        if (ec != std::errc() || p != seed.data() + seed.size()) {
          throw ConfigError("[run] seed must be a non-negative integer");
        }
        c.seed = v;
      }
      c.model = s.has("model") ? s.text("model") : c.model;
      if (c.model != "ca_markov" && c.model != "mlp" && c.model != "both") {
        throw ConfigError("[run] model must be ca_markov, mlp or both");
      }
    } else if (name == "maps") {
      MapsConfig m;
      m.legend = s.file("legend");
      if (s.has("t_prev2")) m.t_prev2 = dated(s, "t_prev2");
      m.t_prev = dated(s, "t_prev");
      m.t_curr = dated(s, "t_curr");
      m.t_next = dated(s, "t_next");
      m.mask = s.file_opt("mask");
      std::vector<double> dates;
      if (m.t_prev2) dates.push_back(m.t_prev2->date);
      dates.insert(dates.end(), {m.t_prev.date, m.t_curr.date, m.t_next.date});
      for (std::size_t k = 1; k < dates.size(); ++k) {
        if (!(dates[k] > dates[k - 1])) {
          throw ConfigError("[maps] dates must increase strictly: " + format_number(dates[k - 1]) +
                            " is not before " + format_number(dates[k]));
        }
      }
      c.maps = std::move(m);
    } else if (name.rfind("criterion:", 0) == 0) {
      CriterionConfig cc;
      cc.name = name.substr(10);
      if (cc.name.empty()) throw ConfigError("criterion section without a name");
      if (s.has("source") == s.has("distance_to")) {
        throw ConfigError("[" + name + "] needs exactly one of source or distance_to");
      }
      cc.distance = s.has("distance_to");
      cc.path = s.file(cc.distance ? "distance_to" : "source");
      criterion_names.insert(cc.name);
      c.criteria.push_back(std::move(cc));
    } else if (name.rfind("suitability:", 0) == 0) {
      SuitabilityConfig sc;
      try {
        sc.class_id = parse_int(name.substr(12), "suitability class");
      } catch (const DataError& e) {
        throw ConfigError(std::string("[") + name + "] " + e.what());
      }
      if (!suitability_classes.insert(sc.class_id).second) {
        throw ConfigError("duplicate section [" + name + "]");
      }
      for (const auto& f : list(s.text("factors"))) {
        FactorConfig fc;
        fc.criterion = f;
        try {
          if (auto fz = s.text_opt("fuzzy_" + f)) fc.fuzzy = parse_fuzzy_spec(*fz);
          if (auto rc = s.text_opt("reclass_" + f)) fc.reclass = parse_reclass_table(*rc);
        } catch (const Error& e) {
          throw ConfigError("[" + name + "] factor " + f + ": " + e.what());
        }
        if (fc.fuzzy.has_value() == !fc.reclass.empty()) {
          throw ConfigError("[" + name + "] factor " + f +
                            " needs exactly one of fuzzy_" + f + " or reclass_" + f);
        }
        sc.factors.push_back(std::move(fc));
      }
      if (sc.factors.empty()) throw ConfigError("[" + name + "] lists no factors");
      sc.saaty = s.file_opt("saaty");
      if (sc.factors.size() > 1 && !sc.saaty) {
        throw ConfigError("missing key 'saaty' in [" + name + "] (needed for several factors)");
      }
      if (auto ow = s.text_opt("order_weights")) {
        for (const auto& v : list(*ow)) sc.order_weights.push_back(parse_number(v, "order_weights"));
        if (sc.order_weights.size() != sc.factors.size()) {
          throw ConfigError("[" + name + "] needs one order weight per factor");
        }
      }
      if (auto cons = s.text_opt("constraint")) {
        for (const auto& item : split(*cons, ';')) {
          const auto t = trim(item);
          if (t.empty()) continue;
          const auto colon = t.find(':');
          if (colon == std::string::npos) {
            throw ConfigError("[" + name + "] constraint must read criterion:predicate");
          }
          ConstraintConfig k{trim(t.substr(0, colon)), trim(t.substr(colon + 1))};
          try {
            parse_constraint_predicate(k.predicate);
          } catch (const Error& e) {
            throw ConfigError("[" + name + "] constraint: " + e.what());
          }
          sc.constraints.push_back(std::move(k));
        }
      }
      c.suitability.push_back(std::move(sc));
    } else if (name == "markov") {
      c.markov.order = s.integer_or("order", 1);
      if (c.markov.order != 1 && c.markov.order != 2) {
        throw ConfigError("[markov] order must be 1 or 2");
      }
    } else if (name == "ca") {
      c.ca.kernel = s.integer_or("kernel", c.ca.kernel);
      c.ca.iterations = s.integer_or("iterations", c.ca.iterations);
      if (c.ca.kernel < 3 || c.ca.kernel % 2 == 0) {
        throw ConfigError("[ca] kernel must be odd and at least 3");
      }
      if (c.ca.iterations < 0) throw ConfigError("[ca] iterations must be positive");
    } else if (name == "mlp") {
      c.mlp.hidden = s.integer_or("hidden", c.mlp.hidden);
      c.mlp.learning_rate = s.number_or("learning_rate", c.mlp.learning_rate);
      c.mlp.epochs = s.integer_or("epochs", c.mlp.epochs);
      if (s.has("focal_class")) c.mlp.focal_class = s.integer("focal_class");
      c.mlp.threshold = s.number_or("threshold", c.mlp.threshold);
      if (c.mlp.hidden < 1 || c.mlp.epochs < 0 || c.mlp.learning_rate < 0.0) {
        throw ConfigError("[mlp] hidden >= 1, epochs >= 0 and learning_rate >= 0 required");
      }
    } else if (name == "preprocess") {
      PreprocessConfig p;
      p.bands = band_list(s, "bands");
      p.dark_mask = s.file_opt("dark_mask");
      p.percentile = s.number_or("percentile", 0.0);
      if (!(p.percentile >= 0.0 && p.percentile <= 100.0)) {
        throw ConfigError("[preprocess] percentile must lie in [0, 100]");
      }
      c.preprocess = std::move(p);
    } else if (name == "indices") {
      IndicesConfig ic;
      ic.red = s.file("red");
      ic.nir = s.file("nir");
      ic.mir = s.file("mir");
      ic.ndvi_weight = s.number_or("ndvi_weight", 0.5);
      if (!(ic.ndvi_weight >= 0.0 && ic.ndvi_weight <= 1.0)) {
        throw ConfigError("[indices] ndvi_weight must lie in [0, 1]");
      }
      c.indices = std::move(ic);
    } else if (name == "change") {
      ChangeConfig ch;
      for (const auto& p : list(s.text("ndim"))) ch.ndim.push_back(s.resolve(p, "ndim"));
      if (ch.ndim.size() != 3) throw ConfigError("[change] ndim must list three dates");
      ch.low_fraction = s.number_or("low_fraction", ch.low_fraction);
      ch.high_fraction = s.number_or("high_fraction", ch.high_fraction);
      if (!(0.0 <= ch.low_fraction && ch.low_fraction <= ch.high_fraction &&
            ch.high_fraction <= 1.0)) {
        throw ConfigError("[change] need 0 <= low_fraction <= high_fraction <= 1");
      }
      ch.grouping = s.file_opt("grouping");
      c.change = std::move(ch);
    } else if (name == "classify") {
      ClassifyConfig cl;
      cl.bands = band_list(s, "bands");
      cl.training = s.file("training");
      cl.legend = s.file("legend");
      cl.beta = s.number_or("beta", cl.beta);
      cl.sweeps = s.integer_or("sweeps", cl.sweeps);
      cl.priors = s.has("priors") ? s.text("priors") : cl.priors;
      if (cl.priors != "empirical" && cl.priors != "equal") {
        throw ConfigError("[classify] priors must be empirical or equal");
      }
      if (cl.beta < 0.0 || cl.sweeps < 1) {
        throw ConfigError("[classify] beta must be non-negative and sweeps positive");
      }
      cl.reference = s.file_opt("reference");
      c.classify = std::move(cl);
    } else if (name == "synth") {
      c.synth.rows = s.integer_or("rows", c.synth.rows);
      c.synth.cols = s.integer_or("cols", c.synth.cols);
      c.synth.patches = s.integer_or("patches", c.synth.patches);
      if (auto d = s.text_opt("dates")) {
        c.synth.dates.clear();
        for (const auto& v : list(*d)) c.synth.dates.push_back(parse_number(v, "synth dates"));
      }
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    s.finish();
  }

  std::sort(c.suitability.begin(), c.suitability.end(),
            [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  for (const auto& sc : c.suitability) {
    for (const auto& f : sc.factors) {
      if (!criterion_names.count(f.criterion)) {
        throw ConfigError("[suitability:" + std::to_string(sc.class_id) +
                          "] refers to undefined criterion '" + f.criterion + "'");
      }
    }
    for (const auto& k : sc.constraints) {
      if (!criterion_names.count(k.criterion)) {
        throw ConfigError("[suitability:" + std::to_string(sc.class_id) +
                          "] constraint on undefined criterion '" + k.criterion + "'");
      }
    }
  }
  if (c.markov.order == 2 && c.maps && !c.maps->t_prev2) {
    throw ConfigError("missing key 't_prev2' in [maps] (needed for [markov] order = 2)");
  }
  if (c.output_dir.empty()) c.output_dir = (base_dir / "out").lexically_normal();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  PipelineConfig c = parse_config(read_text_file(path), base);
  c.source = path;
  return c;
}

namespace {

std::string show(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.string();
  const auto rel = p.lexically_relative(base);
  return rel.empty() ? p.string() : rel.string();
}

std::string show_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_number(v[k]);
  return out;
}

}  // namespace

std::string echo_config(const PipelineConfig& c) {
  const fs::path base = c.source.empty() ? fs::path{} : fs::absolute(c.source).parent_path();
  std::ostringstream o;
  o << "[run]\nseed = " << c.seed << "\nmodel = " << c.model << "\n";
  if (c.maps) {
    const auto& m = *c.maps;
    o << "\n[maps]\nlegend = " << show(m.legend, base) << "\n";
    auto put = [&](const char* key, const DatedMap& d) {
      o << key << " = " << show(d.path, base) << "\n" << key << "_date = " << format_number(d.date)
        << "\n";
    };
    if (m.t_prev2) put("t_prev2", *m.t_prev2);
    put("t_prev", m.t_prev);
    put("t_curr", m.t_curr);
    put("t_next", m.t_next);
    if (m.mask) o << "mask = " << show(*m.mask, base) << "\n";
  }
  for (const auto& cc : c.criteria) {
    o << "\n[criterion:" << cc.name << "]\n"
      << (cc.distance ? "distance_to" : "source") << " = " << show(cc.path, base) << "\n";
  }
  for (const auto& sc : c.suitability) {
    o << "\n[suitability:" << sc.class_id << "]\nfactors = ";
    for (std::size_t k = 0; k < sc.factors.size(); ++k) o << (k ? "," : "") << sc.factors[k].criterion;
    o << "\n";
    for (const auto& f : sc.factors) {
      if (f.fuzzy) {
        o << "fuzzy_" << f.criterion << " = " << to_string(*f.fuzzy) << "\n";
      } else {
        o << "reclass_" << f.criterion << " = ";
        for (std::size_t k = 0; k < f.reclass.size(); ++k) {
          o << (k ? ";" : "") << format_number(f.reclass[k].from_min) << ":"
            << format_number(f.reclass[k].from_max) << ":" << format_number(f.reclass[k].to_value);
        }
        o << "\n";
      }
    }
    if (sc.saaty) o << "saaty = " << show(*sc.saaty, base) << "\n";
    if (!sc.order_weights.empty()) o << "order_weights = " << show_list(sc.order_weights) << "\n";
    if (!sc.constraints.empty()) {
      o << "constraint = ";
      for (std::size_t k = 0; k < sc.constraints.size(); ++k) {
        o << (k ? ";" : "") << sc.constraints[k].criterion << ":" << sc.constraints[k].predicate;
      }
      o << "\n";
    }
  }
  o << "\n[markov]\norder = " << c.markov.order << "\n";
  o << "\n[ca]\nkernel = " << c.ca.kernel << "\niterations = ";
  if (c.ca.iterations > 0) {
    o << c.ca.iterations << "\n";
  } else if (c.maps) {
    o << std::max(1L, std::lround(c.maps->t_next.date - c.maps->t_curr.date)) << "\n";
  } else {
    o << "auto\n";
  }
  o << "\n[mlp]\nhidden = " << c.mlp.hidden << "\nlearning_rate = " << format_number(c.mlp.learning_rate)
    << "\nepochs = " << c.mlp.epochs << "\nthreshold = " << format_number(c.mlp.threshold) << "\n";
  if (c.mlp.focal_class) o << "focal_class = " << *c.mlp.focal_class << "\n";
  if (c.preprocess) {
    o << "\n[preprocess]\nbands = ";
    for (std::size_t k = 0; k < c.preprocess->bands.size(); ++k) {
      o << (k ? "," : "") << c.preprocess->bands[k].first << ":"
        << show(c.preprocess->bands[k].second, base);
    }
    o << "\n";
    if (c.preprocess->dark_mask) o << "dark_mask = " << show(*c.preprocess->dark_mask, base) << "\n";
    o << "percentile = " << format_number(c.preprocess->percentile) << "\n";
  }
  if (c.indices) {
    o << "\n[indices]\nred = " << show(c.indices->red, base) << "\nnir = " << show(c.indices->nir, base)
      << "\nmir = " << show(c.indices->mir, base)
      << "\nndvi_weight = " << format_number(c.indices->ndvi_weight) << "\n";
  }
  if (c.change) {
    o << "\n[change]\nndim = ";
    for (std::size_t k = 0; k < c.change->ndim.size(); ++k) o << (k ? "," : "") << show(c.change->ndim[k], base);
    o << "\nlow_fraction = " << format_number(c.change->low_fraction)
      << "\nhigh_fraction = " << format_number(c.change->high_fraction) << "\n";
    if (c.change->grouping) o << "grouping = " << show(*c.change->grouping, base) << "\n";
  }
  if (c.classify) {
    o << "\n[classify]\nbands = ";
    for (std::size_t k = 0; k < c.classify->bands.size(); ++k) {
      o << (k ? "," : "") << c.classify->bands[k].first << ":"
        << show(c.classify->bands[k].second, base);
    }
    o << "\ntraining = " << show(c.classify->training, base) << "\nlegend = " << show(c.classify->legend, base)
      << "\nbeta = " << format_number(c.classify->beta) << "\nsweeps = " << c.classify->sweeps
      << "\npriors = " << c.classify->priors << "\n";
    if (c.classify->reference) o << "reference = " << show(*c.classify->reference, base) << "\n";
  }
  o << "\n[synth]\nrows = " << c.synth.rows << "\ncols = " << c.synth.cols
    << "\npatches = " << c.synth.patches << "\ndates = " << show_list(c.synth.dates) << "\n";
  return o.str();
}

}  // namespace lcm
