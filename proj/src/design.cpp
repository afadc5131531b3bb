#include "hte/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

namespace hte {

namespace {

void check_labels(const SurveyDesign& d) {
  const auto n = static_cast<std::size_t>(d.size());
  if (!d.strata.empty() && d.strata.size() != n) {
    throw DesignError("stratum labels have length " + std::to_string(d.strata.size()) +
                      ", expected " + std::to_string(n));
  }
  if (!d.psu.empty() && d.psu.size() != n) {
    throw DesignError("PSU labels have length " + std::to_string(d.psu.size()) + ", expected " +
                      std::to_string(n));
  }
  if (!d.psu.empty() && !d.strata.empty()) {
    std::unordered_map<Label, Label> home;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = home.emplace(d.psu[i], d.strata[i]);
      if (!inserted && it->second != d.strata[i]) {
        throw DesignError("PSU " + std::to_string(d.psu[i]) + " spans strata " +
                          std::to_string(it->second) + " and " + std::to_string(d.strata[i]));
      }
    }
  }
}

double default_pop_size(const Vector& w) { return std::max(1.0, std::round(w.sum())); }

void check_pop_size(double N) {
  if (!(N > 0.0) || !std::isfinite(N)) throw DesignError("population size must be positive");
}

void check_conformable(const Matrix& X, const Vector& r, const SurveyDesign& d) {
  if (X.rows() != r.size() || X.rows() != d.size()) {
    throw DesignError("design matrix, residuals and design have mismatched lengths");
  }
}

}  // namespace

SurveyDesign design_from_pi(Vector pi, DesignLabels labels) {
  SurveyDesign d;
  d.source = WeightSource::inclusion_probability;
  d.pi = std::move(pi);
  d.strata = std::move(labels.strata);
  d.psu = std::move(labels.psu);
  for (Index i = 0; i < d.pi.size(); ++i) {
    if (!(d.pi[i] > 0.0) || !(d.pi[i] <= 1.0)) {
      throw DesignError("inclusion probability " + std::to_string(d.pi[i]) + " at unit " +
                        std::to_string(i) + " is outside (0, 1]");
    }
  }
  d.weights = d.pi.cwiseInverse();
  d.pop_size = labels.pop_size.value_or(default_pop_size(d.weights));
  check_pop_size(d.pop_size);
  check_labels(d);
  return d;
}

SurveyDesign design_from_weights(Vector weights, DesignLabels labels) {
  SurveyDesign d;
  d.source = WeightSource::weight;
  d.weights = std::move(weights);
  d.strata = std::move(labels.strata);
  d.psu = std::move(labels.psu);
  for (Index i = 0; i < d.weights.size(); ++i) {
    if (!(d.weights[i] > 0.0) || !std::isfinite(d.weights[i])) {
      throw DesignError("weight " + std::to_string(d.weights[i]) + " at unit " +
                        std::to_string(i) + " is not positive");
    }
  }
  d.pi = d.weights.cwiseInverse();
  d.pop_size = labels.pop_size.value_or(default_pop_size(d.weights));
  check_pop_size(d.pop_size);
  check_labels(d);
  return d;
}

SurveyDesign uniform_design(Index n, double pop_size) {
  if (n <= 0 || pop_size < static_cast<double>(n)) {
    throw DesignError("uniform design needs 0 < n <= N");
  }
  return design_from_pi(Vector::Constant(n, static_cast<double>(n) / pop_size),
                        DesignLabels{pop_size, {}, {}});
}

SurveyDesign hajek_rescale(const SurveyDesign& design, double pop_size) {
  check_pop_size(pop_size);
  SurveyDesign d = design;
  d.weights *= pop_size / design.weights.sum();
  d.pop_size = pop_size;
  return d;
}

DesignDiagnostics validate_design(const SurveyDesign& design) {
  const Index n = design.size();
  if (design.pi.size() != n) throw DesignError("pi and weights have different lengths");
  if (n == 0) throw DesignError("empty design");
  for (Index i = 0; i < n; ++i) {
    if (!(design.weights[i] > 0.0)) throw DesignError("non-positive weight at unit " + std::to_string(i));
    if (design.source == WeightSource::inclusion_probability &&
        (!(design.pi[i] > 0.0) || !(design.pi[i] <= 1.0))) {
      throw DesignError("inclusion probability outside (0, 1] at unit " + std::to_string(i));
    }
  }
  check_pop_size(design.pop_size);
  check_labels(design);

  DesignDiagnostics out;
  out.n = n;
  const auto groups = group_units(design);
  out.n_strata = static_cast<Index>(groups.size());
  for (const auto& g : groups) out.n_psu += static_cast<Index>(g.psus.size());
  out.weight_sum = design.weights.sum();
  out.pop_size = design.pop_size;
  out.discrepancy = std::abs(out.weight_sum - design.pop_size) / design.pop_size;
  out.pi_min = design.pi.minCoeff();
  out.pi_max = design.pi.maxCoeff();
  return out;
}

double ht_total(const Vector& values, const SurveyDesign& design) {
  if (values.size() != design.size()) {
    throw DesignError("values have length " + std::to_string(values.size()) + ", design has " +
                      std::to_string(design.size()));
  }
  return design.weights.dot(values);
}

std::vector<StratumGroup> group_units(const SurveyDesign& design) {
  std::vector<StratumGroup> groups;
  std::map<Label, std::size_t> stratum_slot;
  std::vector<std::map<Label, std::size_t>> psu_slot;
  for (Index i = 0; i < design.size(); ++i) {
    const Label h = design.stratum_of(i);
    auto [hit, new_stratum] = stratum_slot.emplace(h, groups.size());
    if (new_stratum) {
      groups.push_back({h, {}});
      psu_slot.emplace_back();
    }
    auto& g = groups[hit->second];
    auto [jit, new_psu] = psu_slot[hit->second].emplace(design.psu_of(i), g.psus.size());
    if (new_psu) g.psus.emplace_back();
    g.psus[jit->second].push_back(i);
  }
  return groups;
}

MeatMatrix meat_independent(const Matrix& X, const Vector& residuals, const SurveyDesign& design) {
  check_conformable(X, residuals, design);
  const Vector scale = (design.weights.array() * residuals.array()).square();
  const double N = design.pop_size;
  Matrix m = X.transpose() * scale.asDiagonal() * X / (N * N);
  return {0.5 * (m + m.transpose()), MeatStructure::independent};
}

MeatMatrix meat_model_based(const Matrix& X, const Vector& model_variance,
                            const SurveyDesign& design) {
  check_conformable(X, model_variance, design);
  const Vector scale = design.weights.array().square() * model_variance.array();
  const double N = design.pop_size;
  Matrix m = X.transpose() * scale.asDiagonal() * X / (N * N);
  return {0.5 * (m + m.transpose()), MeatStructure::model_based};
}

MeatMatrix meat_stratified_cluster(const Matrix& X, const Vector& residuals,
                                   const SurveyDesign& design, const ClusterOptions& options) {
  check_conformable(X, residuals, design);
  const Index p = X.cols();
  Matrix acc = Matrix::Zero(p, p);
  for (const auto& stratum : group_units(design)) {
    if (stratum.psus.size() == 1) {
      if (options.single_psu == SinglePsuPolicy::reject) {
        throw DesignError("stratum " + std::to_string(stratum.stratum) +
                          " has a single PSU; variance is not identifiable (use certainty mode)");
      }
      for (Index i : stratum.psus.front()) {
        const double s = design.weights[i] * residuals[i];
        acc.noalias() += (s * s) * X.row(i).transpose() * X.row(i);
      }
      continue;
    }
    Vector centred_total = Vector::Zero(p);
    for (const auto& unit_ids : stratum.psus) {
      double mean_r = 0.0;
      for (Index i : unit_ids) mean_r += residuals[i];
      mean_r /= static_cast<double>(unit_ids.size());
      Vector raw = Vector::Zero(p);
      Vector centred = Vector::Zero(p);
      for (Index i : unit_ids) {
        raw.noalias() += design.weights[i] * residuals[i] * X.row(i).transpose();
        centred.noalias() += design.weights[i] * (residuals[i] - mean_r) * X.row(i).transpose();
      }
      const Vector& diagonal = options.center_diagonal ? centred : raw;
      acc.noalias() += diagonal * diagonal.transpose();
      acc.noalias() -= centred * centred.transpose();
      centred_total += centred;
    }
    acc.noalias() += centred_total * centred_total.transpose();
  }
  const double N = design.pop_size;
  acc /= N * N;
  return {0.5 * (acc + acc.transpose()), MeatStructure::stratified_cluster};
}

std::string_view to_string(MeatStructure structure) {
  switch (structure) {
    case MeatStructure::independent:
      return "independent";
    case MeatStructure::stratified_cluster:
      return "stratified_cluster";
    case MeatStructure::model_based:
      return "model_based";
  }
  return "unknown";
}

MeatStructure parse_meat_structure(std::string_view name) {
  if (name == "independent") return MeatStructure::independent;
  if (name == "stratified_cluster" || name == "stratified-cluster") {
    return MeatStructure::stratified_cluster;
  }
  if (name == "model_based" || name == "model-based") return MeatStructure::model_based;
  throw DomainError("unknown meat structure '" + std::string(name) + "'");
}

}  // namespace hte
