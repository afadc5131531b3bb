#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hte/design.hpp"
#include "hte/families.hpp"
#include "hte/fit.hpp"
#include "hte/random.hpp"
#include "hte/rules.hpp"

namespace hte {

enum class PenaltyMethod { analytic, bootstrap };

struct PenaltyReport {
  LossKind loss = LossKind::deviance;
  PenaltyMethod method = PenaltyMethod::analytic;
  double err_weighted = 0.0;  // (1/N) sum w_i Q(y_i, mu_i)
  double omega_hat = 0.0;     // (2/N) sum w_i cov(lambda_i, y_i)
  double err_hat = 0.0;       // err_weighted + omega_hat
  // Analytic (GLM) fields.
  std::optional<double> trace_jv;   // tr(J V)
  std::optional<double> p_hat;      // effective parameters, n tr(J V) or n omega / 2
  std::optional<double> daic;       // -2 l-hat + 2 tr(J V), l-hat relative to the saturated model
  std::optional<double> daic_sum;   // N * daic, the un-normalised criterion
  std::optional<double> aic_naive;  // err + 2p/n on the same loss scale
  MeatStructure meat = MeatStructure::independent;
  // Bootstrap fields.
  int B = 0;
  int dropped = 0;
  double rho_hat = 0.0;
  double phi_hat = 1.0;
  bool dispersion_warning = false;
  Index n = 0;
  double pop_size = 0.0;
};

double in_sample_error(const Loss& loss, const Vector& y, const Vector& mu);
double in_sample_error(const Loss& loss, const Vector& y, const Vector& mu,
                       const SurveyDesign& design);

// Loss used to score a GLM fit: deviance carries the fitted family.
Loss fit_loss(const GlmFit& fit, LossKind kind);

// Per-observation analytic covariances cov(eta-hat_i, y_i) of the linear
// predictor, read off the diagonal of
//   X (X' W C X)^{-1} X' W C D^{-1} Sigma_O
// with C the curvature weights and D = d mu / d eta.
Vector analytic_covariances(const GlmFit& fit, MeatStructure structure = MeatStructure::independent,
                            const ClusterOptions& options = {});

// Analytic HTE: omega = 2 tr(J V) on the deviance scale; for squared error the
// covariances are rescaled by d mu / d eta (sigma^2-hat for gaussian).
PenaltyReport hte_analytic(const GlmFit& fit, LossKind loss = LossKind::deviance,
                           MeatStructure structure = MeatStructure::independent,
                           const ClusterOptions& options = {});

// -2 l-hat + 2 tr(J V) with l-hat measured from the saturated model, i.e.
// the weighted deviance over N plus the trace penalty.
double daic(const GlmFit& fit, MeatStructure structure = MeatStructure::independent,
            const ClusterOptions& options = {});

// Scaled traditional AIC: in-sample error under the fit's own weights plus
// 2p/n (times sigma^2-hat, or the mean of V(mu), for squared error). For an
// unweighted fit this is (-2 loglik + 2p)/n on the deviance scale.
double aic_naive(const GlmFit& fit, LossKind loss = LossKind::deviance);

struct DispersionEstimate {
  double rho_hat = 0.0;
  double phi_hat = 1.0;
  double mean_psu_size = 1.0;
  bool warning = false;
};

// Pooled within-PSU correlation of Pearson residuals (pair-count weights);
// phi = 1 + (mean PSU size - 1) rho.
DispersionEstimate estimate_dispersion(const GlmFit& fit);

struct BootstrapOptions {
  int B = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double phi = 1.0;
  bool estimate_phi = false;
  double max_drop_fraction = 0.1;
  // Replicates are reduced in fixed-size blocks so results do not depend on
  // the number of threads.
  int block_size = 32;
};

// Parametric-bootstrap HTE for an arbitrary rule.
PenaltyReport hte_bootstrap(const PredictionRule& rule, const Matrix& X, const Vector& y,
                            const SurveyDesign& design, const Family& family_for_sim,
                            const BootstrapOptions& options);

// Draws y* ~ family(mu) independently.
Vector simulate_responses(const Family& family, const Vector& mu, Rng& rng);

std::string_view to_string(PenaltyMethod method);

}  // namespace hte
