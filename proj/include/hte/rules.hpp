#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hte/design.hpp"
#include "hte/families.hpp"
#include "hte/fit.hpp"

namespace hte {

// A trained predictor. In-sample quantities are evaluated at the training rows.
class FittedRule {
 public:
  virtual ~FittedRule() = default;

  virtual double predict_mean(const Vector& x) const = 0;
  virtual Vector in_sample_means() const = 0;
  virtual Vector in_sample_lambdas() const = 0;

  // For parametric rules, the family (with estimated dispersion) used to
  // simulate bootstrap responses around in_sample_means().
  virtual std::optional<Family> generating_family() const { return std::nullopt; }
};

// A training procedure (X, y, design) -> FittedRule, plus the loss whose
// lambda-hat convention the fitted rule reports.
class PredictionRule {
 public:
  virtual ~PredictionRule() = default;

  virtual Loss loss() const = 0;
  virtual std::unique_ptr<FittedRule> train(const Matrix& X, const Vector& y,
                                            const SurveyDesign& design) const = 0;

  // Retrain on new responses at the same covariates and design. Rules whose
  // training state does not depend on y may reuse `previous`.
  virtual std::unique_ptr<FittedRule> retrain(const FittedRule& previous, const Matrix& X,
                                              const Vector& y, const SurveyDesign& design) const {
    (void)previous;
    return train(X, y, design);
  }
};

// Design-weighted GLM as a prediction rule. X is used as given (include an
// intercept column if wanted).
class GlmRule final : public PredictionRule {
 public:
  GlmRule(Family family, LossKind loss, FitOptions options = {});

  Loss loss() const override;
  std::unique_ptr<FittedRule> train(const Matrix& X, const Vector& y,
                                    const SurveyDesign& design) const override;
  // Keeps the deviance-scale dispersion of `previous` so bootstrap lambdas
  // share one scale.
  std::unique_ptr<FittedRule> retrain(const FittedRule& previous, const Matrix& X,
                                      const Vector& y, const SurveyDesign& design) const override;

 private:
  Family family_;
  LossKind loss_;
  FitOptions options_;
};

class FittedGlm final : public FittedRule {
 public:
  FittedGlm(GlmFit fit, LossKind loss);
  FittedGlm(GlmFit fit, LossKind loss, double lambda_dispersion);

  double predict_mean(const Vector& x) const override;
  Vector in_sample_means() const override { return fit_.mu; }
  Vector in_sample_lambdas() const override;
  std::optional<Family> generating_family() const override { return fit_.family; }
  const GlmFit& fit() const { return fit_; }
  double lambda_dispersion() const { return lambda_dispersion_; }

 private:
  GlmFit fit_;
  LossKind loss_;
  double lambda_dispersion_;
};

// k-nearest-neighbour classifier on standardised covariates with
// weight-proportional voting.
struct KnnModel {
  int k = 1;
  bool weighted_vote = true;
  Matrix X;                   // standardised training covariates (kept columns)
  Vector y;
  Vector weights;
  Vector center;              // per original column
  Vector scale;               // per original column
  std::vector<Index> kept_columns;
  bool dropped_columns = false;
  // Neighbours of each training row (self included, distance ties expanded).
  std::vector<std::vector<Index>> in_sample_neighbours;
};

KnnModel knn_train(const Matrix& X, const Vector& y, const SurveyDesign& design, int k,
                   bool weighted_vote = true);

// Estimated class-1 probability at x (raw, unstandardised covariates).
double knn_predict(const KnnModel& model, const Vector& x);

// Same neighbours, new responses.
KnnModel knn_with_responses(const KnnModel& model, const Vector& y);

Vector knn_in_sample_means(const KnnModel& model);

class KnnRule final : public PredictionRule {
 public:
  explicit KnnRule(int k, bool weighted_vote = true) : k_(k), weighted_vote_(weighted_vote) {}

  Loss loss() const override { return Loss::zero_one(); }
  std::unique_ptr<FittedRule> train(const Matrix& X, const Vector& y,
                                    const SurveyDesign& design) const override;
  std::unique_ptr<FittedRule> retrain(const FittedRule& previous, const Matrix& X,
                                      const Vector& y, const SurveyDesign& design) const override;

 private:
  int k_;
  bool weighted_vote_;
};

class FittedKnn final : public FittedRule {
 public:
  explicit FittedKnn(KnnModel model);

  double predict_mean(const Vector& x) const override { return knn_predict(model_, x); }
  Vector in_sample_means() const override { return means_; }
  Vector in_sample_lambdas() const override;
  const KnnModel& model() const { return model_; }

 private:
  KnnModel model_;
  Vector means_;
};

struct PenaltyReport;

struct KnnRow {
  int k = 0;
  double err = 0.0;
  double half_omega = 0.0;
  double err_hat = 0.0;
};

struct KnnReportOptions {
  int B = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool weighted_vote = true;
};

// In-sample weighted 0-1 error, bootstrap optimism and Err-hat for each k.
std::vector<PenaltyReport> knn_error_report(const Matrix& X, const Vector& y,
                                            const SurveyDesign& design,
                                            const std::vector<int>& k_list,
                                            const KnnReportOptions& options);

KnnRow to_knn_row(int k, const PenaltyReport& report);

}  // namespace hte
