#pragma once

#include <string>
#include <vector>

#include "hte/design.hpp"
#include "hte/families.hpp"

namespace hte {

struct FitOptions {
  double tol_score = 1e-8;
  int max_iter = 100;
  int max_halving = 30;
  // Optional names for error messages (e.g. the offending collinear column).
  std::vector<std::string> column_names;
};

// A design-weighted GLM fitted by IRLS. `lambda` is the linear predictor
// X theta; `family.dispersion` holds sigma^2-hat for gaussian fits.
struct GlmFit {
  Vector theta;
  Vector mu;
  Vector lambda;
  Vector z;
  Vector sigma_m;  // model variances var(y_i) at mu-hat
  SurveyDesign design;
  Family family;
  Matrix X;
  Vector y;
  bool converged = false;
  int iterations = 0;
  double loglik_weighted = 0.0;  // (1/N) sum w_i log g(y_i; mu_i)
  bool separation_warning = false;
  std::vector<double> loglik_trace;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

// Maximises the HT-weighted log-likelihood by IRLS with step halving. Solves
// each weighted least-squares step with a column-pivoted QR.
GlmFit fit_weighted_glm(const Matrix& X, const Vector& y, const Family& family,
                        const SurveyDesign& design, const FitOptions& options = {});

// z = lambda + (y - mu) / V(mu)
Vector working_residual(const GlmFit& fit);

// Per-observation curvature of the log-likelihood in the linear predictor:
// V(mu) for bernoulli/poisson, 1/sigma^2 for gaussian.
Vector curvature_weights(const GlmFit& fit);

// Residuals on the score scale, (y - mu) / dispersion.
Vector score_residuals(const GlmFit& fit);

// Weighted score X' W (y - mu) / dispersion.
Vector weighted_score(const GlmFit& fit);

// J = (1/N) X' W diag(curvature) X
Matrix information_J(const GlmFit& fit);

struct SandwichVariance {
  Matrix J;
  MeatMatrix VU;
  Matrix V;
  double condition_number = 1.0;
  bool ill_conditioned = false;
};

inline constexpr double kConditionWarning = 1e12;

SandwichVariance sandwich_variance(const GlmFit& fit,
                                   MeatStructure structure = MeatStructure::independent,
                                   const ClusterOptions& options = {});

// One undamped WLS update from the current estimate (used by diagnostics).
Vector wls_update(const GlmFit& fit);

// Prepends an intercept column.
Matrix with_intercept(const Matrix& X);

}  // namespace hte
