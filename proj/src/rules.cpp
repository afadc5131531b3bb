#include "hte/rules.hpp"

namespace hte {

GlmRule::GlmRule(Family family, LossKind loss, FitOptions options)
    : family_(family), loss_(loss), options_(std::move(options)) {
  if (loss_ == LossKind::zero_one) throw DomainError("GLM rules use deviance or squared error loss");
}

Loss GlmRule::loss() const {
  return loss_ == LossKind::deviance ? Loss::deviance(family_) : Loss::squared_error();
}

std::unique_ptr<FittedRule> GlmRule::train(const Matrix& X, const Vector& y,
                                           const SurveyDesign& design) const {
  return std::make_unique<FittedGlm>(fit_weighted_glm(X, y, family_, design, options_), loss_);
}

std::unique_ptr<FittedRule> GlmRule::retrain(const FittedRule& previous, const Matrix& X,
                                             const Vector& y, const SurveyDesign& design) const {
  auto fit = fit_weighted_glm(X, y, family_, design, options_);
  const auto* glm = dynamic_cast<const FittedGlm*>(&previous);
  const double scale = glm ? glm->lambda_dispersion() : fit.family.dispersion;
  return std::make_unique<FittedGlm>(std::move(fit), loss_, scale);
}

FittedGlm::FittedGlm(GlmFit fit, LossKind loss)
    : fit_(std::move(fit)), loss_(loss), lambda_dispersion_(fit_.family.dispersion) {}

FittedGlm::FittedGlm(GlmFit fit, LossKind loss, double lambda_dispersion)
    : fit_(std::move(fit)), loss_(loss), lambda_dispersion_(lambda_dispersion) {}

double FittedGlm::predict_mean(const Vector& x) const {
  return natural_to_mean(fit_.family, x.dot(fit_.theta));
}

Vector FittedGlm::in_sample_lambdas() const {
  if (loss_ == LossKind::squared_error) return fit_.mu;
  // Natural parameter on the deviance scale.
  return fit_.lambda / lambda_dispersion_;
}

}  // namespace hte
