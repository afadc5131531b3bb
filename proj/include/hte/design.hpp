#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hte/types.hpp"

namespace hte {

using Label = std::int64_t;

enum class WeightSource { inclusion_probability, weight };

// A realised complex sample: one entry per sampled unit. Empty `strata`
// means a single stratum; empty `psu` means every unit is its own PSU.
struct SurveyDesign {
  Vector pi;
  Vector weights;
  std::vector<Label> strata;
  std::vector<Label> psu;
  double pop_size = 0.0;
  WeightSource source = WeightSource::inclusion_probability;

  Index size() const { return weights.size(); }
  bool has_strata() const { return !strata.empty(); }
  bool has_psu() const { return !psu.empty(); }
  Label stratum_of(Index i) const { return strata.empty() ? 0 : strata[static_cast<std::size_t>(i)]; }
  Label psu_of(Index i) const { return psu.empty() ? i : psu[static_cast<std::size_t>(i)]; }
};

struct DesignLabels {
  std::optional<double> pop_size;
  std::vector<Label> strata;
  std::vector<Label> psu;
};

// w = 1/pi. N defaults to round(sum w). Throws DesignError on invalid input.
SurveyDesign design_from_pi(Vector pi, DesignLabels labels = {});
// pi = 1/w is informational only; weights may be any positive values.
SurveyDesign design_from_weights(Vector weights, DesignLabels labels = {});
// Equal probabilities n/N (census when N == n).
SurveyDesign uniform_design(Index n, double pop_size);

// Rescales weights so they sum to `pop_size` (Hajek).
SurveyDesign hajek_rescale(const SurveyDesign& design, double pop_size);

struct DesignDiagnostics {
  Index n = 0;
  Index n_strata = 0;
  Index n_psu = 0;
  double weight_sum = 0.0;
  double pop_size = 0.0;
  double discrepancy = 0.0;  // |sum w - N| / N
  double pi_min = 0.0;
  double pi_max = 0.0;
};

DesignDiagnostics validate_design(const SurveyDesign& design);

double ht_total(const Vector& values, const SurveyDesign& design);

// Units grouped by stratum, then PSU, in order of first appearance.
struct StratumGroup {
  Label stratum = 0;
  std::vector<std::vector<Index>> psus;
};
std::vector<StratumGroup> group_units(const SurveyDesign& design);

enum class MeatStructure { independent, stratified_cluster, model_based };

enum class SinglePsuPolicy { reject, certainty };

struct ClusterOptions {
  bool center_diagonal = false;
  SinglePsuPolicy single_psu = SinglePsuPolicy::reject;
};

struct MeatMatrix {
  Matrix matrix;
  MeatStructure structure = MeatStructure::independent;
};

// (1/N^2) sum_i w_i^2 r_i^2 x_i x_i'
MeatMatrix meat_independent(const Matrix& X, const Vector& residuals, const SurveyDesign& design);

// (1/N^2) sum_i w_i^2 v_i x_i x_i' with v the model variances.
MeatMatrix meat_model_based(const Matrix& X, const Vector& model_variance,
                            const SurveyDesign& design);

// (1/N^2) X' W bdiag_h(S_h) W X. Within stratum h the (j, j) PSU block is the
// raw residual outer product and the (j, j') block uses residuals centred at
// their PSU mean.
MeatMatrix meat_stratified_cluster(const Matrix& X, const Vector& residuals,
                                   const SurveyDesign& design, const ClusterOptions& options = {});

std::string_view to_string(MeatStructure structure);
MeatStructure parse_meat_structure(std::string_view name);

}  // namespace hte
