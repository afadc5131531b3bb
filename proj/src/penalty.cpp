#include "hte/penalty.hpp"

#include <cmath>
#include <string>

#include "hte/parallel.hpp"

namespace hte {

namespace {

// d mu / d eta for the canonical link.
double mean_derivative(const Family& family, double mu) {
  return family.kind == FamilyKind::gaussian ? 1.0 : variance_function(family, mu);
}

bool has_constant_column(const Matrix& X) {
  for (Index j = 0; j < X.cols(); ++j) {
    if (X.rows() > 0 && (X.col(j).array() == X(0, j)).all() && X(0, j) != 0.0) return true;
  }
  return false;
}

struct BlockSums {
  Vector lambda_y;
  Vector lambda;
  Vector y;
  int used = 0;
  int dropped = 0;
};

}  // namespace

double in_sample_error(const Loss& loss, const Vector& y, const Vector& mu) {
  if (y.size() != mu.size()) throw DomainError("y and mu have different lengths");
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += loss_q(loss, y[i], mu[i]);
  return total / static_cast<double>(y.size());
}

double in_sample_error(const Loss& loss, const Vector& y, const Vector& mu,
                       const SurveyDesign& design) {
  if (y.size() != mu.size() || y.size() != design.size()) {
    throw DomainError("y, mu and design have different lengths");
  }
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += design.weights[i] * loss_q(loss, y[i], mu[i]);
  return total / design.pop_size;
}

Loss fit_loss(const GlmFit& fit, LossKind kind) {
  switch (kind) {
    case LossKind::deviance:
      return Loss::deviance(fit.family);
    case LossKind::squared_error:
      return Loss::squared_error();
    case LossKind::zero_one:
      return Loss::zero_one();
  }
  return Loss::squared_error();
}

Vector analytic_covariances(const GlmFit& fit, MeatStructure structure,
                            const ClusterOptions& options) {
  const Index n = fit.n();
  const Index p = fit.p();
  const Vector& w = fit.design.weights;
  const Vector c = curvature_weights(fit);
  Vector g(n);  // curvature / (d mu / d eta)
  for (Index i = 0; i < n; ++i) g[i] = c[i] / mean_derivative(fit.family, fit.mu[i]);
  const Matrix A = fit.X.transpose() * w.cwiseProduct(c).asDiagonal() * fit.X;
  Eigen::LDLT<Matrix> solver(A);
  if (solver.info() != Eigen::Success) throw NumericalError("weighted information is singular");
  const Matrix AinvXt = solver.solve(fit.X.transpose());  // p x n

  const Vector r = fit.y - fit.mu;
  Vector cov(n);
  switch (structure) {
    case MeatStructure::independent:
    case MeatStructure::model_based:
      for (Index i = 0; i < n; ++i) {
        const double s = structure == MeatStructure::independent ? r[i] * r[i] : fit.sigma_m[i];
        cov[i] = fit.X.row(i).dot(AinvXt.col(i)) * w[i] * g[i] * s;
      }
      break;
    case MeatStructure::stratified_cluster:
      for (const auto& stratum : group_units(fit.design)) {
        if (stratum.psus.size() == 1) {
          if (options.single_psu == SinglePsuPolicy::reject) {
            throw DesignError("stratum " + std::to_string(stratum.stratum) +
                              " has a single PSU; variance is not identifiable (use certainty mode)");
          }
          for (Index i : stratum.psus.front()) {
            cov[i] = fit.X.row(i).dot(AinvXt.col(i)) * w[i] * g[i] * r[i] * r[i];
          }
          continue;
        }
        Vector centred(n);
        std::vector<Vector> raw_sums, centred_sums;
        Vector centred_total = Vector::Zero(p);
        for (const auto& ids : stratum.psus) {
          double mean_r = 0.0;
          for (Index k : ids) mean_r += r[k];
          mean_r /= static_cast<double>(ids.size());
          Vector raw_sum = Vector::Zero(p);
          Vector centred_sum = Vector::Zero(p);
          for (Index k : ids) {
            centred[k] = r[k] - mean_r;
            raw_sum += w[k] * g[k] * r[k] * fit.X.row(k).transpose();
            centred_sum += w[k] * g[k] * centred[k] * fit.X.row(k).transpose();
          }
          raw_sums.push_back(raw_sum);
          centred_sums.push_back(centred_sum);
          centred_total += centred_sum;
        }
        for (std::size_t j = 0; j < stratum.psus.size(); ++j) {
          const Vector& diag_sum = options.center_diagonal ? centred_sums[j] : raw_sums[j];
          const Vector others = centred_total - centred_sums[j];
          for (Index i : stratum.psus[j]) {
            const double own = options.center_diagonal ? centred[i] : r[i];
            const Vector a = own * diag_sum + centred[i] * others;
            cov[i] = AinvXt.col(i).dot(a);
          }
        }
      }
      break;
  }
  return cov;
}

PenaltyReport hte_analytic(const GlmFit& fit, LossKind loss, MeatStructure structure,
                           const ClusterOptions& options) {
  if (loss == LossKind::zero_one) {
    throw DomainError("no analytic penalty for zero-one loss; use the bootstrap");
  }
  const SandwichVariance sw = sandwich_variance(fit, structure, options);
  const double trace = (sw.J * sw.V).trace();
  const double N = fit.design.pop_size;

  PenaltyReport out;
  out.loss = loss;
  out.method = PenaltyMethod::analytic;
  out.meat = structure;
  out.n = fit.n();
  out.pop_size = N;
  out.err_weighted = in_sample_error(fit_loss(fit, loss), fit.y, fit.mu, fit.design);
  if (loss == LossKind::deviance) {
    out.omega_hat = 2.0 * trace;
  } else if (fit.family.kind == FamilyKind::gaussian) {
    out.omega_hat = 2.0 * trace * fit.family.dispersion;
  } else {
    const Vector cov = analytic_covariances(fit, structure, options);
    double total = 0.0;
    for (Index i = 0; i < fit.n(); ++i) {
      total += fit.design.weights[i] * mean_derivative(fit.family, fit.mu[i]) * cov[i];
    }
    out.omega_hat = 2.0 * total / N;
  }
  out.err_hat = out.err_weighted + out.omega_hat;
  out.trace_jv = trace;
  out.p_hat = static_cast<double>(fit.n()) * trace;
  const double weighted_deviance =
      in_sample_error(Loss::deviance(fit.family), fit.y, fit.mu, fit.design);
  out.daic = weighted_deviance + 2.0 * trace;
  out.daic_sum = N * *out.daic;
  out.aic_naive = aic_naive(fit, loss);
  return out;
}

double daic(const GlmFit& fit, MeatStructure structure, const ClusterOptions& options) {
  const SandwichVariance sw = sandwich_variance(fit, structure, options);
  return in_sample_error(Loss::deviance(fit.family), fit.y, fit.mu, fit.design) +
         2.0 * (sw.J * sw.V).trace();
}

double aic_naive(const GlmFit& fit, LossKind loss) {
  if (loss == LossKind::zero_one) throw DomainError("AIC is not defined for zero-one loss");
  const double n = static_cast<double>(fit.n());
  const double p = static_cast<double>(fit.p());
  const double err = in_sample_error(fit_loss(fit, loss), fit.y, fit.mu, fit.design);
  double scale = 1.0;
  if (loss == LossKind::squared_error) {
    if (fit.family.kind == FamilyKind::gaussian) {
      scale = fit.family.dispersion;
    } else {
      double num = 0.0;
      for (Index i = 0; i < fit.n(); ++i) {
        num += fit.design.weights[i] * variance_function(fit.family, fit.mu[i]);
      }
      scale = num / fit.design.weights.sum();
    }
  }
  return err + 2.0 * p * scale / n;
}

DispersionEstimate estimate_dispersion(const GlmFit& fit) {
  DispersionEstimate out;
  const Index n = fit.n();
  Vector e(n);
  for (Index i = 0; i < n; ++i) e[i] = (fit.y[i] - fit.mu[i]) / std::sqrt(fit.sigma_m[i]);
  const double s2 = e.squaredNorm() / static_cast<double>(n);
  double cross = 0.0;
  double pairs = 0.0;
  Index n_psu = 0;
  for (const auto& stratum : group_units(fit.design)) {
    for (const auto& ids : stratum.psus) {
      ++n_psu;
      double sum = 0.0;
      double sumsq = 0.0;
      for (Index i : ids) {
        sum += e[i];
        sumsq += e[i] * e[i];
      }
      const double m = static_cast<double>(ids.size());
      cross += sum * sum - sumsq;
      pairs += m * (m - 1.0);
    }
  }
  out.mean_psu_size = static_cast<double>(n) / static_cast<double>(n_psu);
  if (pairs == 0.0 || !(s2 > 0.0)) {
    out.warning = true;
    return out;
  }
  out.rho_hat = cross / pairs / s2;
  out.phi_hat = 1.0 + (out.mean_psu_size - 1.0) * out.rho_hat;
  return out;
}

Vector simulate_responses(const Family& family, const Vector& mu, Rng& rng) {
  Vector y(mu.size());
  switch (family.kind) {
    case FamilyKind::gaussian: {
      std::normal_distribution<double> z(0.0, 1.0);
      const double sd = std::sqrt(family.dispersion);
      for (Index i = 0; i < mu.size(); ++i) y[i] = mu[i] + sd * z(rng);
      break;
    }
    case FamilyKind::bernoulli: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Index i = 0; i < mu.size(); ++i) y[i] = u(rng) < mu[i] ? 1.0 : 0.0;
      break;
    }
    case FamilyKind::poisson:
      for (Index i = 0; i < mu.size(); ++i) {
        std::poisson_distribution<long long> pois(mu[i]);
        y[i] = static_cast<double>(pois(rng));
      }
      break;
  }
  return y;
}

PenaltyReport hte_bootstrap(const PredictionRule& rule, const Matrix& X, const Vector& y,
                            const SurveyDesign& design, const Family& family_for_sim,
                            const BootstrapOptions& options) {
  if (options.B < 2) throw DomainError("bootstrap needs B >= 2");
  const Index n = X.rows();
  const auto base = rule.train(X, y, design);

  Family sim_family = family_for_sim;
  Vector sim_mean;
  std::optional<GlmFit> generator;
  if (auto fam = base->generating_family()) {
    sim_family = *fam;
    sim_mean = base->in_sample_means();
  } else {
    const Matrix Xg = has_constant_column(X) ? X : with_intercept(X);
    generator = fit_weighted_glm(Xg, y, family_for_sim, design);
    sim_family = generator->family;
    sim_mean = generator->mu;
  }

  PenaltyReport out;
  out.method = PenaltyMethod::bootstrap;
  out.n = n;
  out.pop_size = design.pop_size;
  out.phi_hat = options.phi;
  if (options.estimate_phi) {
    const auto* glm = dynamic_cast<const FittedGlm*>(base.get());
    const DispersionEstimate d = estimate_dispersion(glm ? glm->fit() : *generator);
    out.rho_hat = d.rho_hat;
    out.phi_hat = d.phi_hat;
    out.dispersion_warning = d.warning;
  }

  Loss loss = rule.loss();
  if (const auto* glm = dynamic_cast<const FittedGlm*>(base.get())) loss = fit_loss(glm->fit(), loss.kind);
  out.loss = loss.kind;
  out.err_weighted = in_sample_error(loss, y, base->in_sample_means(), design);

  const int block = std::max(1, options.block_size);
  const int n_blocks = (options.B + block - 1) / block;
  std::vector<BlockSums> sums(static_cast<std::size_t>(n_blocks));
  parallel_for(static_cast<std::size_t>(n_blocks), options.threads, [&](std::size_t blk) {
    BlockSums s{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0, 0};
    const int first = static_cast<int>(blk) * block;
    const int last = std::min(options.B, first + block);
    for (int b = first; b < last; ++b) {
      Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(b));
      const Vector ystar = simulate_responses(sim_family, sim_mean, rng);
      try {
        const auto refit = rule.retrain(*base, X, ystar, design);
        const Vector lam = refit->in_sample_lambdas();
        s.lambda_y += lam.cwiseProduct(ystar);
        s.lambda += lam;
        s.y += ystar;
        ++s.used;
      } catch (const Error&) {
        ++s.dropped;
      }
    }
    sums[blk] = std::move(s);
  });

  Vector lambda_y = Vector::Zero(n), lambda = Vector::Zero(n), ysum = Vector::Zero(n);
  int used = 0;
  for (const auto& s : sums) {
    lambda_y += s.lambda_y;
    lambda += s.lambda;
    ysum += s.y;
    used += s.used;
    out.dropped += s.dropped;
  }
  if (out.dropped > options.max_drop_fraction * options.B) {
    throw NumericalError(std::to_string(out.dropped) + " of " + std::to_string(options.B) +
                         " bootstrap replicates failed to train");
  }
  if (used < 2) throw NumericalError("fewer than two usable bootstrap replicates");
  out.B = used;
  const double b = static_cast<double>(used);
  const Vector cov =
      out.phi_hat * (lambda_y - lambda.cwiseProduct(ysum) / b) / (b - 1.0);
  out.omega_hat = 2.0 * design.weights.dot(cov) / design.pop_size;
  out.err_hat = out.err_weighted + out.omega_hat;
  out.p_hat = static_cast<double>(n) * out.omega_hat / 2.0;
  return out;
}

std::string_view to_string(PenaltyMethod method) {
  return method == PenaltyMethod::analytic ? "analytic" : "bootstrap";
}

}  // namespace hte
