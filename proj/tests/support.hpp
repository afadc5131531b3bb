#pragma once

#include <cmath>
#include <random>

#include "hte/design.hpp"
#include "hte/families.hpp"
#include "hte/fit.hpp"
#include "hte/random.hpp"

namespace hte::testing {

struct Instance {
  Matrix X;
  Vector y;
  SurveyDesign design;
  Family family;
};

inline Family family_of(int which) {
  switch (which % 3) {
    case 0: return Family::gaussian();
    case 1: return Family::bernoulli();
    default: return Family::poisson();
  }
}

// Intercept plus p-1 standard normal covariates, responses from the family
// with a mild linear signal, pi uniform on [pi_lo, 1].
inline Instance random_instance(const Family& family, Index n, Index p, Rng& rng,
                                double pi_lo = 0.05) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Instance out;
  out.family = family;
  out.X = Matrix::Ones(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 1; j < p; ++j) out.X(i, j) = normal(rng);
  }
  Vector beta(p);
  for (Index j = 0; j < p; ++j) beta[j] = 0.4 * normal(rng);
  out.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = out.X.row(i).dot(beta);
    switch (family.kind) {
      case FamilyKind::gaussian:
        out.y[i] = eta + (0.5 + unif(rng)) * normal(rng);
        break;
      case FamilyKind::bernoulli:
        out.y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        break;
      case FamilyKind::poisson:
        out.y[i] = static_cast<double>(std::poisson_distribution<int>(std::exp(eta))(rng));
        break;
    }
  }
  Vector pi(n);
  for (Index i = 0; i < n; ++i) pi[i] = pi_lo + (1.0 - pi_lo) * unif(rng);
  out.design = design_from_pi(pi);
  return out;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Dense hat-form covariances: diagonal of
// X (X' Sigma_M W X)^{-1} X' W Sigma_O with Sigma_O = diag(r^2).
inline Vector hat_form_covariances(const GlmFit& fit) {
  const Index n = fit.n();
  Matrix SigmaM = Matrix::Zero(n, n), W = Matrix::Zero(n, n), SigmaO = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    SigmaM(i, i) = fit.sigma_m[i];
    W(i, i) = fit.design.weights[i];
    const double r = fit.y[i] - fit.mu[i];
    SigmaO(i, i) = r * r;
  }
  const Matrix A = fit.X.transpose() * SigmaM * W * fit.X;
  const Matrix H = fit.X * A.inverse() * fit.X.transpose() * W * SigmaO;
  return H.diagonal();
}

}  // namespace hte::testing
