#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "hte/penalty.hpp"
#include "hte/rules.hpp"

namespace hte {

namespace {

struct Candidate {
  double distance;
  double weight;
  Index index;
};

bool closer(const Candidate& a, const Candidate& b) {
  return std::tie(a.distance, a.weight, a.index) < std::tie(b.distance, b.weight, b.index);
}

// Neighbours of a standardised point, all ties at the k-th distance included,
// ordered by (distance, weight, index).
std::vector<Index> neighbours(const KnnModel& m, const Vector& xs) {
  const Index n = m.X.rows();
  std::vector<Candidate> c(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i)] = {(m.X.row(i).transpose() - xs).squaredNorm(), m.weights[i], i};
  }
  const auto kth = c.begin() + (m.k - 1);
  std::nth_element(c.begin(), kth, c.end(), closer);
  const double cutoff = kth->distance;
  auto last = std::partition(c.begin(), c.end(),
                             [cutoff](const Candidate& a) { return a.distance <= cutoff; });
  std::sort(c.begin(), last, closer);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(last - c.begin()));
  for (auto it = c.begin(); it != last; ++it) out.push_back(it->index);
  return out;
}

double vote(const KnnModel& m, const std::vector<Index>& ids) {
  double num = 0.0;
  double den = 0.0;
  for (Index i : ids) {
    const double w = m.weighted_vote ? m.weights[i] : 1.0;
    num += w * m.y[i];
    den += w;
  }
  return num / den;
}

Vector standardise(const KnnModel& m, const Vector& x) {
  Vector out(static_cast<Index>(m.kept_columns.size()));
  for (std::size_t j = 0; j < m.kept_columns.size(); ++j) {
    const Index c = m.kept_columns[j];
    out[static_cast<Index>(j)] = (x[c] - m.center[c]) / m.scale[c];
  }
  return out;
}

}  // namespace

KnnModel knn_train(const Matrix& X, const Vector& y, const SurveyDesign& design, int k,
                   bool weighted_vote) {
  const Index n = X.rows();
  if (y.size() != n || design.size() != n) throw DesignError("X, y and design lengths differ");
  if (k < 1) throw DomainError("k must be at least 1");
  if (k > n) throw DomainError("k = " + std::to_string(k) + " exceeds the sample size " + std::to_string(n));
  for (Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw DomainError("kNN classification needs a binary outcome");
  }
  KnnModel m;
  m.k = k;
  m.weighted_vote = weighted_vote;
  m.y = y;
  m.weights = design.weights;
  const double wsum = design.weights.sum();
  m.center.resize(X.cols());
  m.scale.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double mean = design.weights.dot(X.col(j)) / wsum;
    const double var =
        (design.weights.array() * (X.col(j).array() - mean).square()).sum() / wsum;
    m.center[j] = mean;
    m.scale[j] = std::sqrt(var);
    if (var > 0.0 && std::isfinite(var)) {
      m.kept_columns.push_back(j);
    } else {
      m.dropped_columns = true;
    }
  }
  m.X.resize(n, static_cast<Index>(m.kept_columns.size()));
  for (std::size_t j = 0; j < m.kept_columns.size(); ++j) {
    const Index c = m.kept_columns[j];
    m.X.col(static_cast<Index>(j)) = (X.col(c).array() - m.center[c]) / m.scale[c];
  }
  m.in_sample_neighbours.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    m.in_sample_neighbours[static_cast<std::size_t>(i)] = neighbours(m, m.X.row(i).transpose());
  }
  return m;
}

double knn_predict(const KnnModel& model, const Vector& x) {
  return vote(model, neighbours(model, standardise(model, x)));
}

KnnModel knn_with_responses(const KnnModel& model, const Vector& y) {
  if (y.size() != model.y.size()) throw DomainError("response length differs from training data");
  KnnModel m = model;
  m.y = y;
  return m;
}

Vector knn_in_sample_means(const KnnModel& model) {
  Vector mu(model.y.size());
  for (Index i = 0; i < mu.size(); ++i) {
    mu[i] = vote(model, model.in_sample_neighbours[static_cast<std::size_t>(i)]);
  }
  return mu;
}

FittedKnn::FittedKnn(KnnModel model) : model_(std::move(model)), means_(knn_in_sample_means(model_)) {}

Vector FittedKnn::in_sample_lambdas() const {
  const Loss loss = Loss::zero_one();
  return means_.unaryExpr([&](double m) { return lambda_hat(loss, m); });
}

std::unique_ptr<FittedRule> KnnRule::train(const Matrix& X, const Vector& y,
                                           const SurveyDesign& design) const {
  return std::make_unique<FittedKnn>(knn_train(X, y, design, k_, weighted_vote_));
}

std::unique_ptr<FittedRule> KnnRule::retrain(const FittedRule& previous, const Matrix& X,
                                             const Vector& y, const SurveyDesign& design) const {
  if (const auto* knn = dynamic_cast<const FittedKnn*>(&previous)) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) throw DomainError("kNN classification needs a binary outcome");
    }
    return std::make_unique<FittedKnn>(knn_with_responses(knn->model(), y));
  }
  return train(X, y, design);
}

std::vector<PenaltyReport> knn_error_report(const Matrix& X, const Vector& y,
                                            const SurveyDesign& design,
                                            const std::vector<int>& k_list,
                                            const KnnReportOptions& options) {
  std::vector<PenaltyReport> out;
  out.reserve(k_list.size());
  BootstrapOptions boot;
  boot.B = options.B;
  boot.seed = options.seed;
  boot.threads = options.threads;
  for (int k : k_list) {
    KnnRule rule(k, options.weighted_vote);
    out.push_back(hte_bootstrap(rule, X, y, design, Family::bernoulli(), boot));
  }
  return out;
}

KnnRow to_knn_row(int k, const PenaltyReport& report) {
  return {k, report.err_weighted, 0.5 * report.omega_hat, report.err_hat};
}

}  // namespace hte
