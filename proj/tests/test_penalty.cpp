#include <doctest.h>

#include <cmath>

#include "hte/penalty.hpp"
#include "hte/rules.hpp"
#include "support.hpp"

using namespace hte;
using hte::testing::hat_form_covariances;
using hte::testing::random_instance;
using hte::testing::rel_diff;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

class FittedConstant final : public FittedRule {
 public:
  explicit FittedConstant(Index n) : n_(n) {}
  double predict_mean(const Vector&) const override { return 0.3; }
  Vector in_sample_means() const override { return Vector::Constant(n_, 0.3); }
  Vector in_sample_lambdas() const override { return Vector::Constant(n_, 0.3); }

 private:
  Index n_;
};

// Predicts 0.3 whatever the data; fails when the first response is large.
class ConstantRule final : public PredictionRule {
 public:
  explicit ConstantRule(double fail_above = 1e300) : fail_above_(fail_above) {}
  Loss loss() const override { return Loss::squared_error(); }
  std::unique_ptr<FittedRule> train(const Matrix& X, const Vector& y, const SurveyDesign&) const override {
    if (y[0] > fail_above_) throw NumericalError("refusing to train");
    return std::make_unique<FittedConstant>(X.rows());
  }

 private:
  double fail_above_;
};

}  // namespace

TEST_CASE("in_sample_error examples") {
  CHECK(in_sample_error(Loss::squared_error(), vec({1, 3}), vec({1, 1})) == 2.0);
  DesignLabels l;
  l.pop_size = 4;
  const auto d = design_from_weights(vec({1, 3}), l);
  CHECK(in_sample_error(Loss::squared_error(), vec({1, 3}), vec({1, 1}), d) == 3.0);
  CHECK(in_sample_error(Loss::deviance(Family::poisson()), vec({1, 3}), vec({1, 3}), d) == 0.0);
}

TEST_CASE("trace penalty equals the hat-form HTE penalty") {
  Rng rng = make_stream(41, 0);
  for (int t = 0; t < 300; ++t) {
    const Family f = hte::testing::family_of(t);
    auto inst = random_instance(f, 20 + (t * 7) % 180, 1 + t % 5, rng);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, f, inst.design);
    const auto sw = sandwich_variance(fit);
    const double trace = (sw.J * sw.V).trace();
    const Vector cov = hat_form_covariances(fit);
    const double hte = inst.design.weights.dot(cov) / inst.design.pop_size;
    CHECK(rel_diff(trace, hte) < 1e-8);
    const PenaltyReport rep = hte_analytic(fit, LossKind::deviance);
    CHECK(rel_diff(rep.omega_hat, 2 * hte) < 1e-8);
    CHECK(rep.err_hat == rep.err_weighted + rep.omega_hat);
    // Library covariances on the eta scale.
    const Vector lib = analytic_covariances(fit);
    const double lib_trace = inst.design.weights.dot(lib) / inst.design.pop_size / fit.family.dispersion;
    CHECK(rel_diff(lib_trace, trace) < 1e-8);
  }
}

TEST_CASE("cluster analytic covariances agree with the cluster sandwich trace") {
  Rng rng = make_stream(42, 0);
  std::uniform_int_distribution<int> psu_pick(0, 5);
  for (int t = 0; t < 60; ++t) {
    const Family f = hte::testing::family_of(t);
    auto inst = random_instance(f, 60, 3, rng);
    DesignLabels l;
    for (Index i = 0; i < 60; ++i) {
      l.strata.push_back(i % 2);
      l.psu.push_back(10 * (i % 2) + (i < 4 ? i / 2 : psu_pick(rng)));
    }
    const SurveyDesign d = design_from_pi(inst.design.pi, l);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, f, d);
    for (bool centre : {false, true}) {
      ClusterOptions o;
      o.center_diagonal = centre;
      const auto sw = sandwich_variance(fit, MeatStructure::stratified_cluster, o);
      const Vector cov = analytic_covariances(fit, MeatStructure::stratified_cluster, o);
      const double lhs = d.weights.dot(cov) / d.pop_size / fit.family.dispersion;
      CHECK(std::abs(lhs - (sw.J * sw.V).trace()) <= 1e-8 * (1e-12 + std::abs(lhs)) + 1e-14);
    }
  }
}

TEST_CASE("squared-error HTE equals dAIC times sigma^2 for gaussian fits") {
  Rng rng = make_stream(43, 0);
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(Family::gaussian(), 60, 3, rng);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, inst.design);
    const PenaltyReport sq = hte_analytic(fit, LossKind::squared_error);
    const double sigma2 = fit.family.dispersion;
    CHECK(rel_diff(sq.err_hat, daic(fit) * sigma2) < 1e-10);

    const Matrix W = inst.design.weights.asDiagonal();
    const Vector r = inst.y - fit.mu;
    const Matrix A = inst.X.transpose() * W * inst.X;
    const double N = inst.design.pop_size;
    const double eq11 = (inst.design.weights.array() * r.array().square()).sum() / N +
                        2.0 / N * (inst.X.transpose() * W * r.cwiseAbs2().asDiagonal() * W * inst.X * A.inverse()).trace();
    CHECK(rel_diff(sq.err_hat, eq11) < 1e-10);
  }
}

TEST_CASE("gaussian uniform-weight model-based penalty is exactly 2 p sigma^2 / n") {
  Rng rng = make_stream(44, 0);
  for (int t = 0; t < 20; ++t) {
    const Index n = 50 + 10 * t, p = 1 + t % 5;
    auto inst = random_instance(Family::gaussian(), n, p, rng);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, uniform_design(n, 100.0 * n));
    const PenaltyReport rep = hte_analytic(fit, LossKind::squared_error, MeatStructure::model_based);
    const double expect = 2.0 * p * fit.family.dispersion / n;
    CHECK(std::abs(rep.omega_hat - expect) <= 1e-13 * expect);
  }
}

TEST_CASE("zero residuals give zero optimism") {
  Rng rng = make_stream(45, 0);
  auto inst = random_instance(Family::poisson(), 50, 3, rng);
  GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, inst.design);
  fit.y = fit.mu;
  const PenaltyReport rep = hte_analytic(fit, LossKind::deviance);
  CHECK(rep.omega_hat == 0.0);
  CHECK(rep.err_weighted == doctest::Approx(0.0));
}

TEST_CASE("dAIC trace approaches p for a correct gaussian model") {
  Rng rng = make_stream(46, 0);
  const Index n = 2000, p = 3;
  double total = 0;
  for (int rep = 0; rep < 200; ++rep) {
    auto inst = random_instance(Family::gaussian(), n, p, rng);
    // Homoskedastic responses for a correctly specified model.
    std::normal_distribution<double> z;
    for (Index i = 0; i < n; ++i) inst.y[i] = inst.X.row(i).sum() + z(rng);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, uniform_design(n, 20000));
    total += n * *hte_analytic(fit).trace_jv;
  }
  CHECK(std::abs(total / 200 - p) < 0.1 * p);
}

TEST_CASE("naive AIC on a two-point gaussian toy") {
  Matrix X = Matrix::Ones(2, 1);
  const GlmFit fit = fit_weighted_glm(X, vec({0, 2}), Family::gaussian(), uniform_design(2, 2));
  // sigma^2-hat = 1, unit deviances 1 and 1, penalty 2p/n = 1.
  CHECK(aic_naive(fit, LossKind::deviance) == doctest::Approx(2.0));
  CHECK(aic_naive(fit, LossKind::squared_error) == doctest::Approx(2.0));
}

TEST_CASE("naive AIC penalty is 2p/n and agrees with dAIC for a correct model") {
  Rng rng = make_stream(47, 0);
  const Index n = 1000, p = 4;
  double diff = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = random_instance(Family::gaussian(), n, p, rng);
    std::normal_distribution<double> z;
    for (Index i = 0; i < n; ++i) inst.y[i] = inst.X.row(i).sum() + z(rng);
    const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, uniform_design(n, 10 * n));
    const double err = in_sample_error(Loss::deviance(fit.family), fit.y, fit.mu, fit.design);
    CHECK(aic_naive(fit) - err == doctest::Approx(2.0 * p / n));
    diff += daic(fit) - aic_naive(fit);
  }
  CHECK(std::abs(diff / 100) < 0.2 * 2.0 * p / n);
}

TEST_CASE("dispersion estimate") {
  Rng rng = make_stream(48, 0);
  std::uniform_real_distribution<double> u(0, 1);
  std::gamma_distribution<double> g(2.0, 1.0);
  auto clustered = [&](bool correlated) {
    const Index psus = 200, m = 10, n = psus * m;
    Vector y(n);
    DesignLabels l;
    for (Index j = 0; j < psus; ++j) {
      const double a = g(rng), b = g(rng);
      const double p = correlated ? a / (a + b) : 0.5;  // Beta(2, 2) has ICC 0.2
      for (Index k = 0; k < m; ++k) {
        y[j * m + k] = u(rng) < p ? 1 : 0;
        l.strata.push_back(0);
        l.psu.push_back(j);
      }
    }
    const GlmFit fit = fit_weighted_glm(Matrix::Ones(n, 1), y, Family::bernoulli(),
                                        design_from_pi(Vector::Constant(n, 0.1), l));
    return estimate_dispersion(fit);
  };
  const auto none = clustered(false);
  CHECK(std::abs(none.rho_hat) <= 0.02);
  const auto some = clustered(true);
  CHECK(std::abs(some.rho_hat - 0.2) <= 0.05);
  CHECK(some.phi_hat == doctest::Approx(1 + 9 * some.rho_hat));

  auto inst = random_instance(Family::bernoulli(), 50, 2, rng);
  const auto single = estimate_dispersion(fit_weighted_glm(inst.X, inst.y, inst.family, inst.design));
  CHECK(single.rho_hat == 0.0);
  CHECK(single.phi_hat == 1.0);
  CHECK(single.warning);
}

TEST_CASE("bootstrap agrees with the analytic penalty for a gaussian GLM") {
  Rng rng = make_stream(49, 0);
  auto inst = random_instance(Family::gaussian(), 300, 3, rng, 0.5);
  const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, inst.design);
  const double analytic = hte_analytic(fit).omega_hat;
  BootstrapOptions o;
  o.B = 2000;
  o.seed = 5;
  const PenaltyReport boot = hte_bootstrap(GlmRule(Family::gaussian(), LossKind::deviance), inst.X,
                                           inst.y, inst.design, Family::gaussian(), o);
  CHECK(rel_diff(boot.omega_hat, analytic) < 0.1);
  CHECK(boot.err_hat == boot.err_weighted + boot.omega_hat);
  CHECK(boot.B == 2000);
}

TEST_CASE("bootstrap is deterministic and independent of the thread count") {
  Rng rng = make_stream(50, 0);
  auto inst = random_instance(Family::bernoulli(), 120, 3, rng);
  const GlmRule rule(Family::bernoulli(), LossKind::deviance);
  BootstrapOptions o;
  o.B = 101;
  o.seed = 99;
  const double a = hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat;
  o.threads = 3;
  const double b = hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat;
  o.threads = 1;
  const double c = hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat;
  CHECK(a == b);
  CHECK(a == c);
  o.seed = 100;
  CHECK(hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat != a);
}

TEST_CASE("phi scaling") {
  Rng rng = make_stream(51, 0);
  auto inst = random_instance(Family::bernoulli(), 100, 2, rng);
  const GlmRule rule(Family::bernoulli(), LossKind::deviance);
  BootstrapOptions o;
  o.B = 50;
  o.seed = 3;
  const double base = hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat;
  o.phi = 1.0;
  CHECK(hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat == base);
  o.phi = 2.5;
  CHECK(hte_bootstrap(rule, inst.X, inst.y, inst.design, Family::bernoulli(), o).omega_hat ==
        doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("constant rule has zero bootstrap optimism") {
  Rng rng = make_stream(52, 0);
  auto inst = random_instance(Family::bernoulli(), 80, 2, rng);
  BootstrapOptions o;
  o.B = 2000;
  o.seed = 1;
  const auto rep = hte_bootstrap(ConstantRule(), inst.X.rightCols(1), inst.y, inst.design, Family::bernoulli(), o);
  CHECK(std::abs(rep.omega_hat) < 1e-12);
}

TEST_CASE("failed replicates are dropped and counted") {
  Rng rng = make_stream(53, 0);
  auto inst = random_instance(Family::gaussian(), 60, 2, rng);
  const GlmFit fit = fit_weighted_glm(inst.X, inst.y, inst.family, inst.design);
  BootstrapOptions o;
  o.B = 400;
  o.seed = 8;
  // y*_0 ~ N(mu_0, sigma^2); failing above the 97.5% point drops about 2.5%.
  const double cut = fit.mu[0] + 1.96 * std::sqrt(fit.family.dispersion);
  const auto rep = hte_bootstrap(ConstantRule(cut), inst.X, inst.y, inst.design, Family::gaussian(), o);
  CHECK(rep.dropped > 0);
  CHECK(rep.B + rep.dropped == 400);
  const double harsh = fit.mu[0];
  CHECK_THROWS_AS(hte_bootstrap(ConstantRule(harsh), inst.X, inst.y, inst.design, Family::gaussian(), o),
                  NumericalError);
}

TEST_CASE("simulated responses have the family moments") {
  Rng rng = make_stream(54, 0);
  const Index n = 200000;
  for (const Family& f : {Family::gaussian(2.0), Family::bernoulli(), Family::poisson()}) {
    const double mu = f.kind == FamilyKind::bernoulli ? 0.3 : 1.7;
    const Vector y = simulate_responses(f, Vector::Constant(n, mu), rng);
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean - mu) < 0.01);
    CHECK(std::abs(var - variance(f, mu)) < 0.03);
  }
}
