#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdabuse/blr.hpp"
#include "crowdabuse/errors.hpp"
#include "crowdabuse/kernels.hpp"
#include "crowdabuse/rng.hpp"
#include "doctest.h"

using namespace crowdabuse;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<int> y;
};

// Two Gaussian blobs per class along distinct directions.
Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t k, double spread = 1.0) {
  Rng rng(seed);
  Problem p;
  for (std::size_t j = 0; j < d; ++j) p.x.names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % k);
    p.y.push_back(c);
    for (std::size_t j = 0; j < d; ++j) p.x.data.push_back(spread * rng.normal() + (j % k == static_cast<std::size_t>(c) ? 1.0 : 0.0));
  }
  return p;
}

// Direct evaluation of the log posterior and its gradient, written
// independently of the kernels.
double oracle_objective(const std::vector<double>& x, const std::vector<int>& y, std::size_t d, std::size_t k,
                        double sigma2, const std::vector<double>& w, std::vector<double>* grad) {
  const std::size_t n = y.size();
  if (grad) grad->assign(w.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(k);
    for (std::size_t c = 0; c < k; ++c) {
      z[c] = w[c * (d + 1)];
      for (std::size_t j = 0; j < d; ++j) z[c] += w[c * (d + 1) + 1 + j] * x[i * d + j];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double norm = 0.0;
    for (double v : z) norm += std::exp(v - m);
    const double lse = m + std::log(norm);
    total += z[static_cast<std::size_t>(y[i])] - lse;
    if (grad)
      for (std::size_t c = 0; c < k; ++c) {
        const double r = (static_cast<int>(c) == y[i] ? 1.0 : 0.0) - std::exp(z[c] - lse);
        (*grad)[c * (d + 1)] += r;
        for (std::size_t j = 0; j < d; ++j) (*grad)[c * (d + 1) + 1 + j] += r * x[i * d + j];
      }
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = w[c * (d + 1) + 1 + j];
      total -= v * v / (2.0 * sigma2);
      if (grad) (*grad)[c * (d + 1) + 1 + j] -= v / sigma2;
    }
  return total;
}

double accuracy(const BlrModel& m, const Problem& p) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.y.size(); ++i) hit += m.predict(p.x.row(i)) == p.y[i];
  return static_cast<double>(hit) / static_cast<double>(p.y.size());
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("label modes") {
  CHECK(class_names(LabelMode::Multiclass) == std::vector<std::string>{"abusive", "hate", "spam", "normal"});
  CHECK(class_names(LabelMode::Offensive) == std::vector<std::string>{"offensive", "not_offensive"});
  CHECK(class_index(AbuseLabel::Hate, LabelMode::Offensive) == 0);
  CHECK(class_index(AbuseLabel::Spam, LabelMode::Offensive) == 1);
  CHECK(class_index(AbuseLabel::Spam, LabelMode::Multiclass) == 2);
  CHECK(parse_label_mode("offensive") == LabelMode::Offensive);
  CHECK_FALSE(parse_label_mode("binary").has_value());
}

TEST_CASE("kernel objective and gradient match a direct oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t d = 4, k = 3;
    const Problem p = random_problem(seed, 37, d, k);
    Rng rng(seed + 100);
    std::vector<double> w(k * (d + 1));
    for (double& v : w) v = rng.normal();
    const kernels::SoftmaxProblem sp{p.x.data, p.y, d, k, 2.5};
    std::vector<double> expected_grad, grad(w.size());
    const double expected = oracle_objective(p.x.data, p.y, d, k, 2.5, w, &expected_grad);
    CHECK(close(kernels::map_objective_serial(sp, w), expected, 1e-12));
    CHECK(close(kernels::map_objective_gradient_serial(sp, w, grad), expected, 1e-12));
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(close(grad[j], expected_grad[j], 1e-12));
  }
}

TEST_CASE("two-class single-sample gradient has a closed form") {
  // x = 2, y = 0, w0 = (0.5, 1), w1 = (0, -1), sigma2 = 4.
  const std::vector<double> x{2.0};
  const std::vector<int> y{0};
  const std::vector<double> w{0.5, 1.0, 0.0, -1.0};
  const kernels::SoftmaxProblem sp{x, y, 1, 2, 4.0};
  std::vector<double> g(4);
  const double obj = kernels::map_objective_gradient_serial(sp, w, g);
  const double z0 = 2.5, z1 = -2.0;
  const double p0 = 1.0 / (1.0 + std::exp(z1 - z0));
  CHECK(obj == doctest::Approx(std::log(p0) - (1.0 + 1.0) / 8.0).epsilon(1e-14));
  CHECK(g[0] == doctest::Approx(1.0 - p0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx((1.0 - p0) * 2.0 - 1.0 / 4.0).epsilon(1e-14));
  CHECK(g[2] == doctest::Approx(-(1.0 - p0)).epsilon(1e-14));
  CHECK(g[3] == doctest::Approx(-(1.0 - p0) * 2.0 + 1.0 / 4.0).epsilon(1e-14));
}

TEST_CASE("analytic gradient agrees with finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 5, k = 4;
    const Problem p = random_problem(seed, 50, d, k);
    Rng rng(derive_seed(seed, 7));
    std::vector<double> w(k * (d + 1));
    for (double& v : w) v = 0.5 * rng.normal();
    const kernels::SoftmaxProblem sp{p.x.data, p.y, d, k, 10.0};
    CHECK(blr_gradient_check(sp, w) < 1e-5);
  }
}

TEST_CASE("serial and parallel kernels agree") {
  const std::size_t d = 7, k = 4;
  const Problem p = random_problem(11, 3 * kernels::kBlockRows + 17, d, k);
  Rng rng(5);
  std::vector<double> w(k * (d + 1));
  for (double& v : w) v = rng.normal();
  const kernels::SoftmaxProblem sp{p.x.data, p.y, d, k, 3.0};
  std::vector<double> gs(w.size()), gp(w.size());
  const double os = kernels::map_objective_gradient_serial(sp, w, gs);
  const double op = kernels::map_objective_gradient_parallel(sp, w, gp);
  CHECK(close(os, op, 1e-12));
  CHECK(close(kernels::map_objective_serial(sp, w), kernels::map_objective_parallel(sp, w), 1e-12));
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(close(gs[j], gp[j], 1e-12));

  std::vector<double> ps(p.y.size() * k), pp(p.y.size() * k);
  kernels::predict_proba_batch_serial(w, d, k, p.x.data, ps);
  kernels::predict_proba_batch_parallel(w, d, k, p.x.data, pp);
  CHECK(ps == pp);
}

TEST_CASE("separable data is fit perfectly under a weak prior") {
  Problem p;
  p.x.names = {"a", "b"};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const int c = i % 2;
    p.y.push_back(c);
    p.x.data.push_back((c == 0 ? 2.0 : -2.0) + 0.5 * rng.normal());
    p.x.data.push_back(rng.normal());
  }
  BlrConfig cfg;
  cfg.sigma2 = 1e4;
  const BlrModel m = blr_train(p.x, p.y, {"pos", "neg"}, cfg);
  CHECK(accuracy(m, p) == 1.0);
  CHECK(m.iterations > 0);
}

TEST_CASE("a very tight prior predicts the class priors") {
  const Problem base = random_problem(3, 200, 3, 2, 0.5);
  std::vector<int> y(base.y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 4 == 0 ? 1 : 0;  // 75 / 25
  BlrConfig cfg;
  cfg.sigma2 = 1e-6;
  const BlrModel m = blr_train(base.x, y, {"a", "b"}, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto prob = m.predict_proba(base.x.row(i));
    CHECK(prob[0] == doctest::Approx(0.75).epsilon(0.02));
    CHECK(prob[1] == doctest::Approx(0.25).epsilon(0.02 / 0.25));
  }
}

TEST_CASE("the untrained model is uniform") {
  const BlrModel m = BlrModel::zero({"a", "b", "c", "d"}, {"x", "y"});
  const std::vector<double> x{3.0, -1.0};
  for (double v : m.predict_proba(x)) CHECK(v == 0.25);
  CHECK(m.predict(x) == 0);
}

TEST_CASE("training failures") {
  const Problem p = random_problem(0, 10, 2, 2);
  CHECK_THROWS_AS(blr_train(p.x, std::vector<int>(10, 0), {"a", "b"}), DegenerateTraining);
  FeatureMatrix one({"x"});
  one.data = {1.0};
  CHECK_THROWS_AS(blr_train(one, std::vector<int>{0}, {"a", "b"}), DegenerateTraining);
  CHECK_THROWS_AS(blr_train(p.x, std::vector<int>(3, 0), {"a", "b"}), LengthMismatch);
  BlrConfig bad;
  bad.sigma2 = 0.0;
  CHECK_THROWS_AS(blr_train(p.x, p.y, {"a", "b"}, bad), InvalidConfig);

  const BlrModel m = blr_train(p.x, p.y, {"a", "b"});
  CHECK_THROWS_AS(m.predict_proba(std::vector<double>{1.0}), DimensionMismatch);
  FeatureMatrix wide({"a", "b", "c"});
  CHECK_THROWS_AS(m.predict_proba_batch(wide), DimensionMismatch);
}

TEST_CASE("objective increases monotonically and converges") {
  const Problem p = random_problem(8, 300, 6, 4, 1.5);
  BlrConfig cfg;
  cfg.max_iters = 8;
  const BlrModel partial = blr_train(p.x, p.y, {"a", "b", "c", "d"}, cfg);
  REQUIRE(partial.objective_trace_tail.size() == 9);
  for (std::size_t i = 1; i < partial.objective_trace_tail.size(); ++i)
    CHECK(partial.objective_trace_tail[i] >= partial.objective_trace_tail[i - 1]);
  CHECK_FALSE(partial.converged);

  const BlrModel full = blr_train(p.x, p.y, {"a", "b", "c", "d"});
  CHECK(full.converged);
  CHECK(full.final_objective >= partial.final_objective);
  for (std::size_t i = 1; i < full.objective_trace_tail.size(); ++i)
    CHECK(full.objective_trace_tail[i] >= full.objective_trace_tail[i - 1]);

  // At the optimum the gradient nearly vanishes.
  const FeatureMatrix z = full.standardization.apply(p.x);
  std::vector<double> grad;
  oracle_objective(z.data, p.y, 6, 4, full.sigma2, full.weights, &grad);
  double norm = 0.0;
  for (double g : grad) norm = std::max(norm, std::abs(g));
  CHECK(norm < 1e-2);
}

TEST_CASE("serial and parallel training give the same model") {
  const Problem p = random_problem(4, 2500, 5, 3);
  BlrConfig serial;
  serial.parallel = false;
  const BlrModel a = blr_train(p.x, p.y, {"a", "b", "c"}, serial);
  const BlrModel b = blr_train(p.x, p.y, {"a", "b", "c"});
  CHECK(a.iterations == doctest::Approx(b.iterations).epsilon(0.1));
  for (std::size_t i = 0; i < 50; ++i) {
    const auto pa = a.predict_proba(p.x.row(i)), pb = b.predict_proba(p.x.row(i));
    for (std::size_t c = 0; c < 3; ++c) CHECK(pa[c] == doctest::Approx(pb[c]).epsilon(1e-6));
  }
}

TEST_CASE("batch prediction matches single-row prediction") {
  const Problem p = random_problem(2, 120, 4, 2);
  const BlrModel m = blr_train(p.x, p.y, {"a", "b"});
  const auto batch = m.predict_proba_batch(p.x);
  for (std::size_t i = 0; i < 120; ++i) {
    const auto single = m.predict_proba(p.x.row(i));
    CHECK(batch[2 * i] == doctest::Approx(single[0]).epsilon(1e-15));
    CHECK(batch[2 * i] + batch[2 * i + 1] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("permuting feature columns does not change predictions") {
  const Problem p = random_problem(6, 200, 5, 3);
  BlrConfig cfg;
  cfg.tol = 1e-14;
  const BlrModel m = blr_train(p.x, p.y, {"a", "b", "c"}, cfg);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  FeatureMatrix px;
  for (std::size_t j : perm) px.names.push_back(p.x.names[j]);
  for (std::size_t i = 0; i < p.y.size(); ++i)
    for (std::size_t j : perm) px.data.push_back(p.x.row(i)[j]);
  const BlrModel mp = blr_train(px, p.y, {"a", "b", "c"}, cfg);
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    const auto a = m.predict_proba(p.x.row(i)), b = mp.predict_proba(px.row(i));
    for (std::size_t c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-5));
  }
}

TEST_CASE("count columns are log-transformed before scaling") {
  FeatureMatrix x({"spreader.followers_count", "message.sentiment_score"});
  x.data = {0, 0.5, 9, -0.5, 99, 0.0};
  const Standardization s = Standardization::fit(x, {true, false});
  CHECK(s.mean[0] == doctest::Approx((0 + std::log(10.0) + std::log(100.0)) / 3.0));
  CHECK(s.mean[1] == doctest::Approx(0.0));
  FeatureMatrix constant({"c"});
  constant.data = {4, 4, 4};
  const Standardization sc = Standardization::fit(constant, {false});
  CHECK(sc.stddev[0] == 1.0);
  std::vector<double> out(1);
  sc.apply(std::vector<double>{4.0}, out);
  CHECK(out[0] == 0.0);
}

TEST_CASE("model serialization round-trips exactly") {
  const Problem p = random_problem(9, 80, 3, 2);
  BlrConfig cfg;
  cfg.seed = 77;
  const BlrModel m = blr_train(p.x, p.y, {"a", "b"}, cfg);
  const auto text = to_json(m).dump();
  const BlrModel back = blr_from_json(nlohmann::json::parse(text));
  CHECK(back.weights == m.weights);
  CHECK(back.standardization.mean == m.standardization.mean);
  CHECK(back.standardization.stddev == m.standardization.stddev);
  CHECK(back.standardization.log1p == m.standardization.log1p);
  CHECK(back.seed == 77);
  CHECK(to_json(back).dump() == text);
  for (std::size_t i = 0; i < 80; ++i) CHECK(back.predict_proba(p.x.row(i)) == m.predict_proba(p.x.row(i)));

  auto broken = nlohmann::json::parse(text);
  broken["weights"].erase(0);
  CHECK_THROWS_AS(blr_from_json(broken), Error);
  CHECK_THROWS_AS(blr_from_json(nlohmann::json::object()), Error);
}
