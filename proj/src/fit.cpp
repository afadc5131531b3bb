#include "hte/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hte {

namespace {

struct State {
  Vector theta;
  Vector eta;
  Vector mu;
  double loglik = -std::numeric_limits<double>::infinity();
};

// Log-likelihood up to terms free of theta; gaussian uses unit dispersion.
double kernel_loglik(const Family& family, const Vector& y, const Vector& eta, const Vector& mu,
                     const Vector& w) {
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    double li = 0.0;
    switch (family.kind) {
      case FamilyKind::gaussian:
        li = -0.5 * (y[i] - mu[i]) * (y[i] - mu[i]);
        break;
      case FamilyKind::bernoulli:
      case FamilyKind::poisson: {
        const double l = clamp_natural(family, eta[i]);
        li = y[i] * l - cumulant(family, l);
        break;
      }
    }
    total += w[i] * li;
  }
  return total;
}

State evaluate(const Matrix& X, const Vector& y, const Family& family, const Vector& w,
               Vector theta) {
  State s;
  s.theta = std::move(theta);
  s.eta = X * s.theta;
  s.mu.resize(y.size());
  for (Index i = 0; i < y.size(); ++i) s.mu[i] = natural_to_mean(family, s.eta[i]);
  s.loglik = kernel_loglik(family, y, s.eta, s.mu, w);
  return s;
}

// mu stays inside the open domain because linear predictors are clamped.
double curvature(const Family& family, double mu) {
  if (family.kind == FamilyKind::gaussian) return 1.0;
  return variance_function(family, mu);
}

bool at_clamp(const Family& family, const Vector& eta) {
  return family.kind != FamilyKind::gaussian && (eta.array().abs() >= kNaturalClamp).any();
}

// Solves the weighted least-squares problem min || sqrt(a) (X b - t) ||.
Vector solve_wls(const Matrix& X, const Vector& a, const Vector& target,
                 const FitOptions& options) {
  const Vector root = a.cwiseSqrt();
  const Matrix Xw = root.asDiagonal() * X;
  Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    const Index bad = qr.colsPermutation().indices()[qr.rank()];
    std::string name = bad < static_cast<Index>(options.column_names.size())
                           ? options.column_names[static_cast<std::size_t>(bad)]
                           : "column " + std::to_string(bad);
    throw RankDeficientError("design matrix is rank deficient: " + name +
                                 " is collinear with the preceding columns",
                             bad);
  }
  return qr.solve(root.cwiseProduct(target));
}

Vector initial_mean(const Family& family, const Vector& y) {
  switch (family.kind) {
    case FamilyKind::gaussian:
      return y;
    case FamilyKind::bernoulli:
      return (y.array() + 0.5) / 2.0;
    case FamilyKind::poisson:
      return y.array() + 0.1;
  }
  return y;
}

}  // namespace

Matrix with_intercept(const Matrix& X) {
  Matrix out(X.rows(), X.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(X.cols()) = X;
  return out;
}

GlmFit fit_weighted_glm(const Matrix& X, const Vector& y, const Family& family_in,
                        const SurveyDesign& design, const FitOptions& options) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (y.size() != n || design.size() != n) {
    throw DesignError("X, y and design have mismatched lengths");
  }
  if (n <= p) throw DomainError("need more observations than parameters");
  for (Index i = 0; i < n; ++i) {
    if (!in_support(family_in, y[i])) {
      throw DomainError("response " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                        " is outside the " + std::string(to_string(family_in.kind)) + " support");
    }
  }
  Family family = family_in;
  if (family.kind == FamilyKind::gaussian) family.dispersion = 1.0;
  const Vector& w = design.weights;

  // Score scale for the convergence test.
  Vector score_scale = Vector::Zero(p);
  for (Index i = 0; i < n; ++i) {
    score_scale += w[i] * (1.0 + std::abs(y[i])) * X.row(i).cwiseAbs().transpose();
  }

  Vector mu0 = initial_mean(family, y);
  Vector eta0(n), a0(n), z0(n);
  for (Index i = 0; i < n; ++i) {
    eta0[i] = family.kind == FamilyKind::gaussian ? mu0[i] : mean_to_natural(family, mu0[i]);
    const double v = curvature(family, mu0[i]);
    a0[i] = w[i] * v;
    z0[i] = eta0[i] + (y[i] - mu0[i]) / v;
  }
  State state = evaluate(X, y, family, w, solve_wls(X, a0, z0, options));

  GlmFit fit;
  fit.loglik_trace.push_back(state.loglik);
  bool converged = false;
  int iter = 1;
  for (;; ++iter) {
    Vector score = X.transpose() * (w.array() * (y - state.mu).array()).matrix();
    bool small = true;
    for (Index j = 0; j < p; ++j) {
      if (std::abs(score[j]) > options.tol_score * score_scale[j]) small = false;
    }
    if (small) {
      converged = true;
      break;
    }
    if (iter >= options.max_iter) break;

    Vector a(n), z(n);
    for (Index i = 0; i < n; ++i) {
      const double v = curvature(family, state.mu[i]);
      a[i] = w[i] * v;
      z[i] = state.eta[i] + (y[i] - state.mu[i]) / v;
    }
    const Vector proposal = solve_wls(X, a, z, options);
    State next = evaluate(X, y, family, w, proposal);
    double step = 1.0;
    for (int h = 0; h < options.max_halving && !(next.loglik >= state.loglik); ++h) {
      step *= 0.5;
      next = evaluate(X, y, family, w, state.theta + step * (proposal - state.theta));
    }
    if (!(next.loglik >= state.loglik)) {
      // No ascent direction left at machine precision.
      if (next.loglik > state.loglik - 1e-12 * std::abs(state.loglik)) {
        converged = true;
      }
      break;
    }
    const double gain = next.loglik - state.loglik;
    state = std::move(next);
    fit.loglik_trace.push_back(state.loglik);
    if (gain <= 1e-13 * (1.0 + std::abs(state.loglik)) && at_clamp(family, state.eta)) {
      // Separated data: the likelihood has flattened at the clamp.
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("IRLS did not converge after " + std::to_string(iter) + " iterations",
                           state.theta, iter);
  }

  fit.theta = state.theta;
  fit.lambda = X * fit.theta;
  fit.mu = state.mu;
  fit.X = X;
  fit.y = y;
  fit.design = design;
  fit.converged = true;
  fit.iterations = iter;
  fit.separation_warning = at_clamp(family, fit.lambda);
  if (family.kind == FamilyKind::gaussian) {
    const double sigma2 = (w.array() * (y - fit.mu).array().square()).sum() / w.sum();
    if (!(sigma2 > 0.0)) {
      throw NumericalError("degenerate gaussian fit: residual variance is zero");
    }
    family.dispersion = sigma2;
  }
  fit.family = family;
  fit.sigma_m.resize(n);
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    fit.sigma_m[i] = family.dispersion * curvature(family, fit.mu[i]);
    ll += w[i] * log_density(family, y[i], fit.mu[i]);
  }
  fit.loglik_weighted = ll / design.pop_size;
  fit.z = working_residual(fit);
  return fit;
}

Vector working_residual(const GlmFit& fit) {
  Vector z(fit.n());
  for (Index i = 0; i < fit.n(); ++i) {
    const double v = fit.family.kind == FamilyKind::gaussian
                         ? 1.0
                         : variance_function(fit.family, fit.mu[i]);
    if (!(v > 0.0)) throw NumericalError("degenerate fit: zero variance at row " + std::to_string(i));
    z[i] = fit.lambda[i] + (fit.y[i] - fit.mu[i]) / v;
  }
  return z;
}

Vector curvature_weights(const GlmFit& fit) {
  Vector c(fit.n());
  for (Index i = 0; i < fit.n(); ++i) {
    c[i] = fit.family.kind == FamilyKind::gaussian ? 1.0 / fit.family.dispersion
                                                   : curvature(fit.family, fit.mu[i]);
  }
  return c;
}

Vector score_residuals(const GlmFit& fit) {
  return (fit.y - fit.mu) / fit.family.dispersion;
}

Vector weighted_score(const GlmFit& fit) {
  return fit.X.transpose() * fit.design.weights.cwiseProduct(score_residuals(fit));
}

Matrix information_J(const GlmFit& fit) {
  const Vector a = fit.design.weights.cwiseProduct(curvature_weights(fit));
  Matrix J = fit.X.transpose() * a.asDiagonal() * fit.X / fit.design.pop_size;
  return 0.5 * (J + J.transpose());
}

SandwichVariance sandwich_variance(const GlmFit& fit, MeatStructure structure,
                                   const ClusterOptions& options) {
  SandwichVariance out;
  out.J = information_J(fit);
  const Vector r = score_residuals(fit);
  switch (structure) {
    case MeatStructure::independent:
      out.VU = meat_independent(fit.X, r, fit.design);
      break;
    case MeatStructure::stratified_cluster:
      out.VU = meat_stratified_cluster(fit.X, r, fit.design, options);
      break;
    case MeatStructure::model_based: {
      // var(y_i) / dispersion^2 on the score scale
      const Vector v = fit.sigma_m / (fit.family.dispersion * fit.family.dispersion);
      out.VU = meat_model_based(fit.X, v, fit.design);
      break;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.J, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NumericalError("information matrix J is singular");
  out.condition_number = hi / lo;
  out.ill_conditioned = out.condition_number > kConditionWarning;
  Eigen::LLT<Matrix> chol(out.J);
  if (chol.info() != Eigen::Success) throw NumericalError("information matrix J is not positive definite");
  const Matrix Jinv_VU = chol.solve(out.VU.matrix);
  Matrix V = chol.solve(Jinv_VU.transpose());
  out.V = 0.5 * (V + V.transpose());
  return out;
}

Vector wls_update(const GlmFit& fit) {
  Vector a(fit.n());
  const Vector c = curvature_weights(fit);
  for (Index i = 0; i < fit.n(); ++i) a[i] = fit.design.weights[i] * c[i];
  return solve_wls(fit.X, a, fit.z, FitOptions{});
}

}  // namespace hte
