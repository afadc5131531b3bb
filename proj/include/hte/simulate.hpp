#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hte/design.hpp"
#include "hte/families.hpp"
#include "hte/random.hpp"

namespace hte {

enum class ScenarioId { s1, s2_gauss, s2_bern, s3, s4a_gauss, s4a_bern, s4b_gauss, s4b_bern };

// systematic: fixed-size systematic PPS, exact for the stated inclusion
// probabilities. successive: draws one unit at a time with probability
// proportional to size among the units not yet drawn, weighted by the same
// PPS probabilities; its true inclusion probabilities differ when some
// n size_i / sum size approach one.
enum class SamplingScheme { systematic, successive };

std::string_view to_string(SamplingScheme scheme);
SamplingScheme parse_sampling_scheme(std::string_view name);

struct ScenarioSpec {
  ScenarioId id = ScenarioId::s1;
  Index pop_size = 100000;
  Index sample_size = 1000;
  SamplingScheme scheme = SamplingScheme::systematic;
};

Family scenario_family(ScenarioId id);
std::string_view to_string(ScenarioId id);
ScenarioId parse_scenario(std::string_view name);

struct Population {
  Matrix X;       // N x 1
  Vector y;
  Vector pi_raw;  // unnormalised size measure
};

Population generate_population(const ScenarioSpec& spec, Rng& rng);
Population generate_population(const ScenarioSpec& spec, std::uint64_t seed);

struct InclusionProbabilities {
  Vector pi;
  Index clipped = 0;
  bool warning = false;  // more than 1% of units at pi = 1
};

// pi_i = min(1, n size_i / sum size), recomputed over the unclipped units
// until no probability exceeds one.
InclusionProbabilities inclusion_probabilities(const Vector& size, Index n);

struct Sample {
  std::vector<Index> indices;
  SurveyDesign design;
  Index clipped = 0;
  bool clip_warning = false;
};

// Fixed-size systematic PPS on a random permutation of the population, or
// successive sampling.
Sample draw_sample(const Vector& pi_raw, Index n, Rng& rng,
                   SamplingScheme scheme = SamplingScheme::systematic);
Sample draw_sample(const Vector& pi_raw, Index n, std::uint64_t seed,
                   SamplingScheme scheme = SamplingScheme::systematic);

struct ReplicateRecord {
  int replicate = 0;
  double err_pop = 0.0;  // finite-population Err over all N units
  double err = 0.0;      // weighted in-sample error
  double optimism = 0.0; // err_pop - err
  double omega_hat = 0.0;
  double err_hat = 0.0;
  double aic_naive = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

// Mean in input order; type-7 quantiles of the sorted values.
Aggregate summarize(const std::vector<double>& values);
double quantile(std::vector<double> values, double prob);

struct ExperimentSummary {
  ScenarioId scenario = ScenarioId::s1;
  SamplingScheme scheme = SamplingScheme::systematic;
  Index pop_size = 0;
  Index sample_size = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  int failures = 0;
  std::vector<ReplicateRecord> records;
  Aggregate optimism;
  Aggregate omega_hat;
};

// Recomputes the aggregate fields from `records`.
void aggregate(ExperimentSummary& summary);

// Optimism experiment under squared-error loss: replicate r uses the stream
// make_stream(seed, r) for both the population and the sample.
ExperimentSummary run_optimism_experiment(const ScenarioSpec& spec, int reps, std::uint64_t seed,
                                          unsigned threads = 1);

void write_records_csv(std::ostream& out, const ExperimentSummary& summary);
std::vector<ReplicateRecord> read_records_csv(std::istream& in);
std::string summary_json(const ExperimentSummary& summary);

// Oversampling of high-risk units: a stratified SRS taking
// `sample_case_fraction` of the sample from the high-risk stratum.
struct CaseControlSpec {
  FamilyKind family = FamilyKind::bernoulli;
  double prevalence = 1.0 / 200.0;
  double sample_case_fraction = 0.2;
  Index sample_size = 1000;
  Index pop_size = 0;  // 0 picks max(200000, 4 * cases needed / prevalence)
};

struct RelativeErrorRecord {
  int replicate = 0;
  double err_true = 0.0;  // error on the unsampled remainder
  double err_hat = 0.0;
  double aic = 0.0;
  double rel_hte = 0.0;   // |err_hat - err_true| / err_true
  double rel_aic = 0.0;
};

struct RelativeErrorCell {
  CaseControlSpec spec;
  Index pop_size = 0;
  int reps = 0;
  int failures = 0;
  std::vector<RelativeErrorRecord> records;
  double mean_rel_hte = 0.0;
  double mean_rel_aic = 0.0;
  double ratio_of_means = 0.0;  // mean_rel_hte / mean_rel_aic
  double mean_of_ratios = 0.0;
};

Index case_control_pop_size(const CaseControlSpec& spec);

RelativeErrorCell run_relative_error_cell(const CaseControlSpec& spec, int reps,
                                          std::uint64_t seed, unsigned threads = 1,
                                          double max_failure_fraction = 0.01);
std::vector<RelativeErrorCell> run_relative_error_experiment(
    const std::vector<CaseControlSpec>& grid, int reps, std::uint64_t seed, unsigned threads = 1,
    double max_failure_fraction = 0.01);

void write_relative_error_csv(std::ostream& out, const std::vector<RelativeErrorCell>& cells);

// Enumerable design for the unbiasedness oracle. With `stratum_sizes` set the
// design is stratified SRS; otherwise conditional Poisson sampling of size n
// with p(s) proportional to prod_{i in s} size_i.
struct TinySpec {
  Index pop_size = 8;
  Index sample_size = 4;
  std::vector<Index> stratum_sizes;         // population counts per stratum
  std::vector<Index> stratum_sample_sizes;  // sample counts per stratum
  std::vector<double> size;                 // conditional Poisson sizes
  double mean = 0.0;
  double sigma = 1.0;
};

struct EnumeratedSample {
  std::vector<Index> units;
  double probability = 0.0;
};

struct EnumeratedDesign {
  std::vector<EnumeratedSample> samples;
  Vector pi;  // first-order inclusion probabilities
  std::vector<Label> strata;
};

EnumeratedDesign enumerate_design(const TinySpec& spec);

struct BruteForceResult {
  double expected_err = 0.0;      // E_g E_p Err
  double expected_err_hat = 0.0;  // E_g E_p Err-hat
  double se_difference = 0.0;     // Monte Carlo SE of the paired difference
  int draws = 0;
};

// Gaussian mean-only superpopulation; for every draw both errors are
// averaged exactly over all samples. Err-hat uses the true covariance
// penalty w_i sigma^2 / sum_s w under squared-error loss.
BruteForceResult brute_force_optimism(const TinySpec& spec, int draws, std::uint64_t seed);

}  // namespace hte
