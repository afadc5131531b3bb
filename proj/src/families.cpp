#include "hte/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hte {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void require_domain(const Family& family, double mu) {
  if (!in_mean_domain(family, mu)) {
    throw DomainError("mean " + std::to_string(mu) + " outside the open domain of the " +
                      std::string(to_string(family.kind)) + " family");
  }
}

const Family& deviance_family(const Loss& loss) {
  if (!loss.family) throw DomainError("deviance loss requires a family");
  return *loss.family;
}

}  // namespace

Family Family::gaussian(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("gaussian dispersion must be positive and finite");
  }
  return {FamilyKind::gaussian, sigma2};
}
Family Family::bernoulli() { return {FamilyKind::bernoulli, 1.0}; }
Family Family::poisson() { return {FamilyKind::poisson, 1.0}; }

Loss Loss::deviance(const Family& family) { return {LossKind::deviance, family}; }
Loss Loss::squared_error() { return {LossKind::squared_error, std::nullopt}; }
Loss Loss::zero_one() { return {LossKind::zero_one, std::nullopt}; }

double clamp_natural(const Family& family, double lambda) {
  if (family.kind == FamilyKind::gaussian) return lambda;
  return std::clamp(lambda, -kNaturalClamp, kNaturalClamp);
}

double natural_to_mean(const Family& family, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("natural parameter must be finite");
  switch (family.kind) {
    case FamilyKind::gaussian:
      return lambda;
    case FamilyKind::bernoulli: {
      const double l = clamp_natural(family, lambda);
      return 1.0 / (1.0 + std::exp(-l));
    }
    case FamilyKind::poisson:
      return std::exp(clamp_natural(family, lambda));
  }
  return lambda;
}

double mean_to_natural(const Family& family, double mu) {
  require_domain(family, mu);
  switch (family.kind) {
    case FamilyKind::gaussian:
      return mu;
    case FamilyKind::bernoulli:
      return std::log(mu) - std::log1p(-mu);
    case FamilyKind::poisson:
      return std::log(mu);
  }
  return mu;
}

double cumulant(const Family& family, double lambda) {
  switch (family.kind) {
    case FamilyKind::gaussian:
      return 0.5 * lambda * lambda;
    case FamilyKind::bernoulli:
      // log(1 + e^l) without overflow
      return lambda > 0.0 ? lambda + std::log1p(std::exp(-lambda)) : std::log1p(std::exp(lambda));
    case FamilyKind::poisson:
      return std::exp(lambda);
  }
  return 0.0;
}

bool in_mean_domain(const Family& family, double mu) {
  if (!std::isfinite(mu)) return false;
  switch (family.kind) {
    case FamilyKind::gaussian:
      return true;
    case FamilyKind::bernoulli:
      return mu > 0.0 && mu < 1.0;
    case FamilyKind::poisson:
      return mu > 0.0;
  }
  return false;
}

bool in_support(const Family& family, double y) {
  if (!std::isfinite(y)) return false;
  switch (family.kind) {
    case FamilyKind::gaussian:
      return true;
    case FamilyKind::bernoulli:
      return y == 0.0 || y == 1.0;
    case FamilyKind::poisson:
      return y >= 0.0 && std::floor(y) == y;
  }
  return false;
}

double variance_function(const Family& family, double mu) {
  require_domain(family, mu);
  switch (family.kind) {
    case FamilyKind::gaussian:
      return 1.0;
    case FamilyKind::bernoulli:
      return mu * (1.0 - mu);
    case FamilyKind::poisson:
      return mu;
  }
  return 1.0;
}

double variance(const Family& family, double mu) {
  return family.dispersion * variance_function(family, mu);
}

double log_density(const Family& family, double y, double mu) {
  switch (family.kind) {
    case FamilyKind::gaussian: {
      const double s2 = family.dispersion;
      return -0.5 * (y - mu) * (y - mu) / s2 - 0.5 * std::log(2.0 * std::numbers::pi * s2);
    }
    case FamilyKind::bernoulli: {
      if (mu <= 0.0) return y == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      if (mu >= 1.0) return y == 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      return y * std::log(mu) + (1.0 - y) * std::log1p(-mu);
    }
    case FamilyKind::poisson: {
      if (mu <= 0.0) return y == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      return y * std::log(mu) - mu - std::lgamma(y + 1.0);
    }
  }
  return 0.0;
}

double loss_generator(const Loss& loss, double mu) {
  switch (loss.kind) {
    case LossKind::squared_error:
      return -mu * mu;
    case LossKind::zero_one:
      return std::min(mu, 1.0 - mu);
    case LossKind::deviance: {
      const Family& f = deviance_family(loss);
      switch (f.kind) {
        case FamilyKind::gaussian:
          return -mu * mu / f.dispersion;
        case FamilyKind::bernoulli:
          // 2 (psi(lambda) - mu lambda) with the 0 log 0 = 0 limit
          return -2.0 * (xlogx(mu) + xlogx(1.0 - mu));
        case FamilyKind::poisson:
          return 2.0 * (mu - xlogx(mu));
      }
    }
  }
  return 0.0;
}

double loss_generator_derivative(const Loss& loss, double mu) {
  switch (loss.kind) {
    case LossKind::squared_error:
      return -2.0 * mu;
    case LossKind::zero_one:
      return mu < 0.5 ? 1.0 : -1.0;
    case LossKind::deviance: {
      const Family& f = deviance_family(loss);
      if (f.kind == FamilyKind::gaussian) return -2.0 * mu / f.dispersion;
      return -2.0 * mean_to_natural(f, mu);
    }
  }
  return 0.0;
}

double loss_q(const Loss& loss, double y, double mu_hat) {
  switch (loss.kind) {
    case LossKind::squared_error:
      return (y - mu_hat) * (y - mu_hat);
    case LossKind::zero_one:
      return y == classify(mu_hat) ? 0.0 : 1.0;
    case LossKind::deviance:
      break;
  }
  const Family& f = deviance_family(loss);
  if (f.kind == FamilyKind::bernoulli && (mu_hat == 0.0 || mu_hat == 1.0)) {
    return y == mu_hat ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (f.kind == FamilyKind::poisson && mu_hat == 0.0) {
    return y == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  require_domain(f, mu_hat);
  const double value = loss_generator(loss, mu_hat) +
                       loss_generator_derivative(loss, mu_hat) * (y - mu_hat) -
                       loss_generator(loss, y);
  return std::max(0.0, value);
}

double lambda_hat(const Loss& loss, double mu_hat) {
  switch (loss.kind) {
    case LossKind::squared_error:
      return mu_hat;
    case LossKind::zero_one:
      return mu_hat < 0.5 ? -1.0 : 1.0;
    case LossKind::deviance: {
      const Family& f = deviance_family(loss);
      return mean_to_natural(f, mu_hat) / f.dispersion;
    }
  }
  return 0.0;
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::gaussian:
      return "gaussian";
    case FamilyKind::bernoulli:
      return "bernoulli";
    case FamilyKind::poisson:
      return "poisson";
  }
  return "unknown";
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::deviance:
      return "deviance";
    case LossKind::squared_error:
      return "squared_error";
    case LossKind::zero_one:
      return "zero_one";
  }
  return "unknown";
}

FamilyKind parse_family(std::string_view name) {
  if (name == "gaussian") return FamilyKind::gaussian;
  if (name == "bernoulli" || name == "binomial") return FamilyKind::bernoulli;
  if (name == "poisson") return FamilyKind::poisson;
  throw DomainError("unknown family '" + std::string(name) + "'");
}

LossKind parse_loss(std::string_view name) {
  if (name == "deviance") return LossKind::deviance;
  if (name == "squared_error" || name == "squared-error") return LossKind::squared_error;
  if (name == "zero_one" || name == "zero-one") return LossKind::zero_one;
  throw DomainError("unknown loss '" + std::string(name) + "'");
}

}  // namespace hte
