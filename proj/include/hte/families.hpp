#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "hte/types.hpp"

namespace hte {

enum class FamilyKind { gaussian, bernoulli, poisson };

// Exponential family with canonical link. The natural parameter is taken on
// the unit-dispersion scale (gaussian: lambda = mu); `dispersion` carries the
// gaussian sigma^2 and is fixed at 1 for bernoulli and poisson.
struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  double dispersion = 1.0;

  static Family gaussian(double sigma2 = 1.0);
  static Family bernoulli();
  static Family poisson();

  bool operator==(const Family&) const = default;
};

enum class LossKind { deviance, squared_error, zero_one };

// A q-class loss. Deviance needs the family it is the deviance of.
struct Loss {
  LossKind kind = LossKind::squared_error;
  std::optional<Family> family;

  static Loss deviance(const Family& family);
  static Loss squared_error();
  static Loss zero_one();
};

// Linear predictors are clamped to this range before exponentiation.
inline constexpr double kNaturalClamp = 30.0;

double clamp_natural(const Family& family, double lambda);

double natural_to_mean(const Family& family, double lambda);
double mean_to_natural(const Family& family, double mu);

// Cumulant function psi on the unit-dispersion scale; psi'(lambda) = mu.
double cumulant(const Family& family, double lambda);

// V(mu) on the unit-dispersion scale (gaussian: 1).
double variance_function(const Family& family, double mu);
// var(y) = dispersion * V(mu).
double variance(const Family& family, double mu);

bool in_mean_domain(const Family& family, double mu);
bool in_support(const Family& family, double y);

// log g_mu(y), including normalising constants.
double log_density(const Family& family, double y, double mu);

// The concave generator q of the loss and its derivative.
double loss_generator(const Loss& loss, double mu);
double loss_generator_derivative(const Loss& loss, double mu);

// Q(y, mu_hat) = q(mu_hat) + q'(mu_hat)(y - mu_hat) - q(y). Deviance with a
// bernoulli mu_hat on {0, 1} and y at the other end returns +infinity.
double loss_q(const Loss& loss, double y, double mu_hat);

// lambda_hat = -q'(mu_hat) / 2, except zero_one which uses -1 / +1 at 0.5.
double lambda_hat(const Loss& loss, double mu_hat);

// Classification rule shared by zero_one loss and kNN: 1{mu >= 0.5}.
inline double classify(double mu) { return mu >= 0.5 ? 1.0 : 0.0; }

std::string_view to_string(FamilyKind kind);
std::string_view to_string(LossKind kind);
FamilyKind parse_family(std::string_view name);
LossKind parse_loss(std::string_view name);

}  // namespace hte
