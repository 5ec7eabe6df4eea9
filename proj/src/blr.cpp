#include "crowdabuse/blr.hpp"

#include <algorithm>
#include <cmath>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/features.hpp"

namespace crowdabuse {

std::string_view to_string(LabelMode mode) noexcept {
  return mode == LabelMode::Multiclass ? "multiclass" : "offensive";
}

std::optional<LabelMode> parse_label_mode(std::string_view text) {
  if (text == "multiclass") return LabelMode::Multiclass;
  if (text == "offensive") return LabelMode::Offensive;
  return std::nullopt;
}

std::vector<std::string> class_names(LabelMode mode) {
  if (mode == LabelMode::Offensive) return {"offensive", "not_offensive"};
  std::vector<std::string> out;
  for (AbuseLabel l : kAllLabels) out.emplace_back(to_string(l));
  return out;
}

int class_index(AbuseLabel label, LabelMode mode) noexcept {
  if (mode == LabelMode::Offensive) return is_offensive(label) ? 0 : 1;
  return static_cast<int>(index_of(label));
}

Standardization Standardization::fit(const FeatureMatrix& x, const std::vector<bool>& log1p_mask) {
  const std::size_t d = x.cols(), n = x.rows();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), log1p_mask};
  s.log1p.resize(d, false);
  if (n == 0) return s;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x.data[i * d + j];
      sum += s.log1p[j] ? std::log1p(std::max(v, 0.0)) : v;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = x.data[i * d + j];
      if (s.log1p[j]) v = std::log1p(std::max(v, 0.0));
      sq += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.mean[j] = mean;
    // Constant columns standardize to 0, so the prior pins their weights at 0.
    s.stddev[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardization::apply(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t j = 0; j < raw.size(); ++j) {
    double v = raw[j];
    if (log1p[j]) v = std::log1p(std::max(v, 0.0));
    out[j] = (v - mean[j]) / stddev[j];
  }
}

FeatureMatrix Standardization::apply(const FeatureMatrix& raw) const {
  FeatureMatrix out(raw.names);
  out.data.resize(raw.data.size());
  const std::size_t n = raw.rows();
  for (std::size_t i = 0; i < n; ++i) apply(raw.row(i), out.row(i));
  return out;
}

std::vector<double> BlrModel::predict_proba(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionMismatch(dim(), x.size());
  std::vector<double> z(dim());
  standardization.apply(x, z);
  std::vector<double> p(num_classes());
  kernels::softmax_probabilities(weights, dim(), num_classes(), z, p);
  return p;
}

int BlrModel::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> BlrModel::predict_proba_batch(const FeatureMatrix& x, bool parallel) const {
  if (x.cols() != dim()) throw DimensionMismatch(dim(), x.cols());
  const FeatureMatrix z = standardization.apply(x);
  std::vector<double> out(x.rows() * num_classes());
  if (parallel)
    kernels::predict_proba_batch_parallel(weights, dim(), num_classes(), z.data, out);
  else
    kernels::predict_proba_batch_serial(weights, dim(), num_classes(), z.data, out);
  return out;
}

BlrModel BlrModel::zero(std::vector<std::string> classes, std::vector<std::string> feature_names) {
  BlrModel m;
  const std::size_t d = feature_names.size();
  m.weights.assign(classes.size() * (d + 1), 0.0);
  m.classes = std::move(classes);
  m.feature_names = std::move(feature_names);
  m.standardization = Standardization{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0),
                                      std::vector<bool>(d, false)};
  return m;
}

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

BlrModel blr_train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> classes,
                   const BlrConfig& config) {
  const std::size_t n = x.rows(), d = x.cols(), k = classes.size();
  if (y.size() != n) throw LengthMismatch("blr_train: " + std::to_string(n) + " rows but " +
                                          std::to_string(y.size()) + " labels");
  if (k < 2) throw DegenerateTraining("blr_train: need at least two classes");
  if (n < k) throw DegenerateTraining("blr_train: fewer samples than classes");
  if (!(config.sigma2 > 0.0)) throw InvalidConfig("blr_train: sigma2 must be > 0");
  std::vector<std::size_t> support(k, 0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw DegenerateTraining("blr_train: label out of range");
    ++support[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (support[c] == 0) throw DegenerateTraining("blr_train: class '" + classes[c] + "' has no samples");

  std::vector<bool> mask(d);
  for (std::size_t j = 0; j < d; ++j) mask[j] = is_count_feature(x.names[j]);

  BlrModel model;
  model.classes = std::move(classes);
  model.feature_names = x.names;
  model.sigma2 = config.sigma2;
  model.seed = config.seed;
  model.standardization = Standardization::fit(x, mask);
  const FeatureMatrix z = model.standardization.apply(x);

  const kernels::SoftmaxProblem problem{z.data, y, d, k, config.sigma2};
  auto evaluate = [&](std::span<const double> w, std::span<double> g) {
    return config.parallel ? kernels::map_objective_gradient_parallel(problem, w, g)
                           : kernels::map_objective_gradient_serial(problem, w, g);
  };

  const std::size_t wc = problem.weight_count();
  std::vector<double> w(wc, 0.0), g(wc), trial(wc), trial_g(wc);
  double objective = evaluate(w, g);
  if (!std::isfinite(objective)) throw NonFinite("blr_train: initial objective is not finite");

  double step = config.initial_step > 0.0 ? config.initial_step : 1.0 / static_cast<double>(n);
  std::vector<double> trace{objective};
  int iter = 0;
  bool converged = false;
  for (; iter < config.max_iters; ++iter) {
    const double gnorm2 = squared_norm(g);
    if (gnorm2 == 0.0) {
      converged = true;
      break;
    }
    double t = step;
    double trial_objective = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t j = 0; j < wc; ++j) trial[j] = w[j] + t * g[j];
      trial_objective = evaluate(trial, trial_g);
      if (std::isfinite(trial_objective) && trial_objective >= objective + config.armijo * t * gnorm2) {
        accepted = true;
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) {
      converged = true;  // no ascent direction left at machine precision
      break;
    }

    // Barzilai-Borwein estimate for the next trial step (concave objective: s.y < 0).
    double ss = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < wc; ++j) {
      const double s = trial[j] - w[j];
      ss += s * s;
      sy += s * (trial_g[j] - g[j]);
    }
    step = (sy < 0.0 && ss > 0.0) ? ss / -sy : 2.0 * t;

    const double improvement = trial_objective - objective;
    w.swap(trial);
    g.swap(trial_g);
    objective = trial_objective;
    trace.push_back(objective);
    if (improvement < config.tol * std::max(1.0, std::abs(objective))) {
      converged = true;
      ++iter;
      break;
    }
  }

  if (!std::isfinite(objective)) throw NonFinite("blr_train: objective diverged");
  model.weights = std::move(w);
  model.iterations = iter;
  model.converged = converged;
  model.final_objective = objective;
  const std::size_t tail = std::min<std::size_t>(trace.size(), 10);
  model.objective_trace_tail.assign(trace.end() - static_cast<std::ptrdiff_t>(tail), trace.end());
  return model;
}

BlrModel blr_train(const FeatureMatrix& x, std::span<const AbuseLabel> labels, LabelMode mode,
                   const BlrConfig& config) {
  std::vector<int> y(labels.size());
  std::transform(labels.begin(), labels.end(), y.begin(), [mode](AbuseLabel l) { return class_index(l, mode); });
  return blr_train(x, y, class_names(mode), config);
}

double blr_gradient_check(const kernels::SoftmaxProblem& problem, std::span<const double> w, double h) {
  const std::size_t wc = problem.weight_count();
  std::vector<double> analytic(wc);
  kernels::map_objective_gradient_serial(problem, w, analytic);
  std::vector<double> probe(w.begin(), w.end());
  double worst = 0.0;
  for (std::size_t j = 0; j < wc; ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = kernels::map_objective_serial(problem, probe);
    probe[j] = saved - h;
    const double down = kernels::map_objective_serial(problem, probe);
    probe[j] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[j] - numeric) / denom);
  }
  return worst;
}

nlohmann::ordered_json to_json(const BlrModel& m) {
  nlohmann::ordered_json j;
  j["classes"] = m.classes;
  j["feature_names"] = m.feature_names;
  j["weights"] = m.weights;
  j["sigma2"] = m.sigma2;
  j["standardization"] = {{"mean", m.standardization.mean},
                          {"std", m.standardization.stddev},
                          {"log1p", m.standardization.log1p}};
  j["seed"] = m.seed;
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  j["final_objective"] = m.final_objective;
  j["objective_trace_tail"] = m.objective_trace_tail;
  return j;
}

BlrModel blr_from_json(const nlohmann::json& j) {
  try {
    BlrModel m;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.sigma2 = j.at("sigma2").get<double>();
    const auto& s = j.at("standardization");
    m.standardization.mean = s.at("mean").get<std::vector<double>>();
    m.standardization.stddev = s.at("std").get<std::vector<double>>();
    m.standardization.log1p = s.at("log1p").get<std::vector<bool>>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.iterations = j.value("iterations", 0);
    m.converged = j.value("converged", false);
    m.final_objective = j.value("final_objective", 0.0);
    m.objective_trace_tail = j.value("objective_trace_tail", std::vector<double>{});
    const std::size_t d = m.feature_names.size();
    if (m.weights.size() != m.classes.size() * (d + 1) || m.standardization.mean.size() != d ||
        m.standardization.stddev.size() != d || m.standardization.log1p.size() != d)
      throw Error("model.json: inconsistent dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model.json: ") + e.what());
  }
}

}  // namespace crowdabuse
