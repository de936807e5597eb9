#include "lcm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "lcm/csv.hpp"
#include "lcm/error.hpp"

namespace lcm {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

MlpModel make_model(int n_inputs, int q, bool probability) {
  if (n_inputs < 1 || q < 1) throw ConfigError("mlp needs at least one input and one hidden unit");
  MlpModel m;
  m.n_inputs = n_inputs;
  m.q = q;
  m.input_weights.assign(static_cast<std::size_t>(q) * n_inputs, 0.0);
  m.hidden_biases.assign(static_cast<std::size_t>(q), 0.0);
  m.output_weights.assign(static_cast<std::size_t>(q), 0.0);
  m.probability = probability;
  return m;
}

MlpModel init_model(int n_inputs, int q, std::uint64_t seed, bool probability) {
  MlpModel m = make_model(n_inputs, q, probability);
  std::mt19937_64 rng(seed);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(n_inputs));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(q));
  std::uniform_real_distribution<double> hidden(-r1, r1);
  std::uniform_real_distribution<double> output(-r2, r2);
  for (auto& w : m.input_weights) w = hidden(rng);
  for (auto& w : m.hidden_biases) w = hidden(rng);
  for (auto& w : m.output_weights) w = output(rng);
  m.output_bias = output(rng);
  return m;
}

namespace {

void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.n_inputs)) {
    throw DataError("mlp input has " + std::to_string(x.size()) + " values, model expects " +
                    std::to_string(model.n_inputs));
  }
}

// Hidden activations into `h`; returns the raw output.
double evaluate(const MlpModel& model, std::span<const double> x, std::vector<double>& h) {
  const auto n = static_cast<std::size_t>(model.n_inputs);
  h.resize(static_cast<std::size_t>(model.q));
  double out = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double* w = model.input_weights.data() + i * n;
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) z += x[k] * w[k];
    h[i] = sigmoid(z + model.hidden_biases[i]);
    out += model.output_weights[i] * h[i];
  }
  return out + model.output_bias;
}

MlpGradient zero_gradient(const MlpModel& m) {
  return {std::vector<double>(m.input_weights.size(), 0.0),
          std::vector<double>(m.hidden_biases.size(), 0.0),
          std::vector<double>(m.output_weights.size(), 0.0), 0.0};
}

// Adds scale * d(0.5 (o - t)^2) into g; returns the output o.
double accumulate_gradient(const MlpModel& m, std::span<const double> x, double target,
                           double scale, std::vector<double>& h, MlpGradient& g) {
  const double raw = evaluate(m, x, h);
  const double o = m.probability ? sigmoid(raw) : raw;
  double delta = o - target;
  if (m.probability) delta *= o * (1.0 - o);
  delta *= scale;
  const auto n = static_cast<std::size_t>(m.n_inputs);
  g.output_bias += delta;
  for (std::size_t i = 0; i < h.size(); ++i) {
    g.output_weights[i] += delta * h[i];
    const double dh = delta * m.output_weights[i] * h[i] * (1.0 - h[i]);
    g.hidden_biases[i] += dh;
    double* gw = g.input_weights.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) gw[k] += dh * x[k];
  }
  return o;
}

}  // namespace

double forward_raw(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  std::vector<double> h;
  return evaluate(model, x, h);
}

double forward(const MlpModel& model, std::span<const double> x) {
  const double raw = forward_raw(model, x);
  return model.probability ? sigmoid(raw) : raw;
}

MlpGradient gradient(const MlpModel& model, std::span<const double> x, double target) {
  check_input(model, x);
  MlpGradient g = zero_gradient(model);
  std::vector<double> h;
  accumulate_gradient(model, x, target, 1.0, h, g);
  return g;
}

double mean_squared_error(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("empty dataset");
  if (data.n_inputs != model.n_inputs) throw DataError("dataset width differs from the model");
  std::vector<double> h;
  double sum = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double raw = evaluate(model, data.row(s), h);
    const double d = (model.probability ? sigmoid(raw) : raw) - data.targets[s];
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

TrainResult train(MlpModel model, const Dataset& data, double learning_rate, int epochs) {
  if (data.size() == 0) throw DataError("cannot train on an empty dataset");
  if (data.n_inputs != model.n_inputs) throw DataError("dataset width differs from the model");
  if (learning_rate < 0.0 || epochs < 0) throw ConfigError("learning rate and epochs must be >= 0");
  TrainResult result;
  result.loss.reserve(static_cast<std::size_t>(epochs));
  std::vector<double> h;
  const double scale = 1.0 / static_cast<double>(data.size());
  for (int e = 0; e < epochs; ++e) {
    MlpGradient g = zero_gradient(model);
    double sum = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
      const double d = accumulate_gradient(model, data.row(s), data.targets[s], scale, h, g) -
                       data.targets[s];
      sum += d * d;
    }
    result.loss.push_back(sum / static_cast<double>(data.size()));
    if (learning_rate == 0.0) continue;
    for (std::size_t i = 0; i < g.input_weights.size(); ++i) {
      model.input_weights[i] -= learning_rate * g.input_weights[i];
    }
    for (std::size_t i = 0; i < g.hidden_biases.size(); ++i) {
      model.hidden_biases[i] -= learning_rate * g.hidden_biases[i];
      model.output_weights[i] -= learning_rate * g.output_weights[i];
    }
    model.output_bias -= learning_rate * g.output_bias;
  }
  for (double w : model.input_weights) {
    if (!std::isfinite(w)) throw NumericalError("mlp training diverged");
  }
  result.model = std::move(model);
  return result;
}

namespace {

void check_layers(const LandCoverMap& prior, const std::vector<Grid>& criteria) {
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    require_same_frame(prior.geometry(), criteria[k].geometry(),
                       "criterion " + std::to_string(k) + " vs prior map");
  }
}

bool jointly_valid(const LandCoverMap& prior, const std::vector<Grid>& criteria, std::size_t i) {
  if (!prior.is_valid(i)) return false;
  for (const auto& c : criteria) {
    if (!c.is_valid(i)) return false;
  }
  return true;
}

void append_features(const FeatureSpec& f, const LandCoverMap& prior,
                     const std::vector<Grid>& criteria, std::size_t i, std::vector<double>& out) {
  const int cls = prior.class_at(i);
  const auto it = std::lower_bound(f.class_ids.begin(), f.class_ids.end(), cls);
  if (it == f.class_ids.end() || *it != cls) {
    throw DataError("class " + std::to_string(cls) + " was not seen when the model was trained");
  }
  for (std::size_t k = 0; k < f.class_ids.size(); ++k) {
    out.push_back(f.class_ids[k] == cls ? 1.0 : 0.0);
  }
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const double lo = f.criterion_min[k], hi = f.criterion_max[k];
    out.push_back(hi > lo ? (criteria[k][i] - lo) / (hi - lo) : 0.5);
  }
}

}  // namespace

Dataset encode_features(const FeatureSpec& features, const LandCoverMap& prior,
                        const std::vector<Grid>& criteria) {
  if (criteria.size() != features.criterion_min.size()) {
    throw DataError("model expects " + std::to_string(features.criterion_min.size()) +
                    " criteria, got " + std::to_string(criteria.size()));
  }
  check_layers(prior, criteria);
  Dataset d;
  d.n_inputs = features.n_inputs();
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!jointly_valid(prior, criteria, i)) continue;
    append_features(features, prior, criteria, i, d.inputs);
    d.targets.push_back(0.0);
    d.pixels.push_back(i);
  }
  return d;
}

SampleSet build_samples(const LandCoverMap& prior, const LandCoverMap& next,
                        const std::vector<Grid>& criteria, int focal_class) {
  require_same_frame(prior.geometry(), next.geometry(), "next map vs prior map");
  check_layers(prior, criteria);
  if (prior.legend().count(focal_class) == 0) {
    throw ConfigError("focal class " + std::to_string(focal_class) + " is not in the legend");
  }
  SampleSet s;
  s.features.class_ids = prior.class_ids();
  s.features.focal_class = focal_class;
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (jointly_valid(prior, criteria, i) && next.is_valid(i)) pixels.push_back(i);
  }
  if (pixels.empty()) throw DataError("no pixel is valid in every training layer");

  for (std::size_t k = 0; k < criteria.size(); ++k) {
    double lo = criteria[k][pixels.front()], hi = lo;
    for (std::size_t i : pixels) {
      lo = std::min(lo, criteria[k][i]);
      hi = std::max(hi, criteria[k][i]);
    }
    if (lo == hi) {
      s.warnings.push_back("criterion " + std::to_string(k) + " is constant; encoded as 0.5");
    }
    s.features.criterion_min.push_back(lo);
    s.features.criterion_max.push_back(hi);
  }

  // Release class: most frequent non-focal successor of focal pixels.
  std::map<int, std::int64_t> successors;
  for (int id : s.features.class_ids) {
    if (id != focal_class) successors[id] = 0;
  }
  for (std::size_t i : pixels) {
    if (prior.class_at(i) == focal_class && next.class_at(i) != focal_class) {
      ++successors[next.class_at(i)];
    }
  }
  s.features.release_class = focal_class;
  std::int64_t best = -1;
  for (const auto& [id, n] : successors) {
    if (n > best) {
      best = n;
      s.features.release_class = id;
    }
  }

  s.data.n_inputs = s.features.n_inputs();
  for (std::size_t i : pixels) {
    append_features(s.features, prior, criteria, i, s.data.inputs);
    s.data.targets.push_back(next.class_at(i) == focal_class ? 1.0 : 0.0);
    s.data.pixels.push_back(i);
  }
  return s;
}

MlpPrediction predict_map(const MlpModel& model, const FeatureSpec& features,
                          const LandCoverMap& prior, const std::vector<Grid>& criteria,
                          double threshold) {
  if (model.n_inputs != features.n_inputs()) {
    throw DataError("model has " + std::to_string(model.n_inputs) + " inputs, features give " +
                    std::to_string(features.n_inputs()));
  }
  const Dataset d = encode_features(features, prior, criteria);
  const GridGeometry geo = prior.geometry();
  std::vector<double> prob(geo.size(), geo.nodata);
  std::vector<double> labels(geo.size(), geo.nodata);
  std::vector<double> h;
  for (std::size_t s = 0; s < d.size(); ++s) {
    const double raw = evaluate(model, d.row(s), h);
    const double p = model.probability ? sigmoid(raw) : raw;
    const std::size_t i = d.pixels[s];
    prob[i] = p;
    const int cls = prior.class_at(i);
    if (p >= threshold) {
      labels[i] = features.focal_class;
    } else {
      labels[i] = cls == features.focal_class ? features.release_class : cls;
    }
  }
  return {Grid(geo, std::move(prob)),
          LandCoverMap(Grid(geo, std::move(labels)), prior.legend(), "mlp")};
}

namespace {

void put_row(std::ostringstream& out, const double* v, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out << (k ? " " : "") << format_number(v[k]);
  out << "\n";
}

std::vector<double> numbers(const std::string& line, std::size_t expected, const std::string& what) {
  std::istringstream in(line);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, "model " + what));
  if (out.size() != expected) {
    throw DataError("model " + what + ": expected " + std::to_string(expected) + " values, got " +
                    std::to_string(out.size()));
  }
  return out;
}

}  // namespace

std::string format_model(const MlpModel& m, const FeatureSpec& f) {
  std::ostringstream out;
  out << "mlp " << m.n_inputs << " " << m.q << " " << (m.probability ? "probability" : "raw")
      << "\n";
  out << "focal " << f.focal_class << " release " << f.release_class << "\n";
  out << "classes " << f.class_ids.size();
  for (int id : f.class_ids) out << " " << id;
  out << "\n";
  for (int i = 0; i < m.q; ++i) {
    put_row(out, m.input_weights.data() + static_cast<std::size_t>(i) * m.n_inputs,
            static_cast<std::size_t>(m.n_inputs));
  }
  put_row(out, m.hidden_biases.data(), m.hidden_biases.size());
  put_row(out, m.output_weights.data(), m.output_weights.size());
  out << format_number(m.output_bias) << "\n";
  out << "bounds " << f.criterion_min.size() << "\n";
  for (std::size_t k = 0; k < f.criterion_min.size(); ++k) {
    out << format_number(f.criterion_min[k]) << " " << format_number(f.criterion_max[k]) << "\n";
  }
  return out.str();
}

std::pair<MlpModel, FeatureSpec> parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&](const std::string& what) {
    if (!std::getline(in, line)) throw DataError("model file ends before " + what);
    return line;
  };
  std::istringstream head(next("the header"));
  std::string tag, mode;
  int n = 0, q = 0;
  if (!(head >> tag >> n >> q >> mode) || tag != "mlp" || (mode != "probability" && mode != "raw")) {
    throw DataError("not a model file (bad header)");
  }
  MlpModel m = make_model(n, q, mode == "probability");
  FeatureSpec f;
  std::istringstream focal(next("the focal line"));
  std::string t1, t2;
  if (!(focal >> t1 >> f.focal_class >> t2 >> f.release_class) || t1 != "focal") {
    throw DataError("model file: bad focal line");
  }
  std::istringstream cls(next("the class line"));
  std::size_t nc = 0;
  if (!(cls >> tag >> nc) || tag != "classes") throw DataError("model file: bad class line");
  f.class_ids.resize(nc);
  for (auto& id : f.class_ids) {
    if (!(cls >> id)) throw DataError("model file: short class line");
  }
  for (int i = 0; i < q; ++i) {
    const auto row = numbers(next("input weights"), static_cast<std::size_t>(n), "input weights");
    std::copy(row.begin(), row.end(), m.input_weights.begin() + static_cast<std::ptrdiff_t>(i) * n);
  }
  m.hidden_biases = numbers(next("hidden biases"), static_cast<std::size_t>(q), "hidden biases");
  m.output_weights = numbers(next("output weights"), static_cast<std::size_t>(q), "output weights");
  m.output_bias = numbers(next("output bias"), 1, "output bias")[0];
  std::istringstream b(next("bounds"));
  std::size_t nb = 0;
  if (!(b >> tag >> nb) || tag != "bounds") throw DataError("model file: bad bounds line");
  for (std::size_t k = 0; k < nb; ++k) {
    const auto mm = numbers(next("bounds"), 2, "bounds");
    f.criterion_min.push_back(mm[0]);
    f.criterion_max.push_back(mm[1]);
  }
  if (f.n_inputs() != n) throw DataError("model file: feature count differs from input count");
  return {std::move(m), std::move(f)};
}

std::pair<MlpModel, FeatureSpec> read_model(const std::filesystem::path& path) {
  return parse_model(read_text_file(path));
}

std::string format_loss_csv(const std::vector<double>& loss) {
  std::string out = "epoch,mse\n";
  for (std::size_t e = 0; e < loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_number(loss[e]) + "\n";
  }
  return out;
}

}  // namespace lcm
