#include "hte/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hte/csv.hpp"
#include "hte/fit.hpp"
#include "hte/parallel.hpp"
#include "hte/penalty.hpp"

namespace hte {

namespace {

constexpr double kMaxFailureFraction = 0.01;

struct ScenarioName {
  ScenarioId id;
  std::string_view name;
};

constexpr ScenarioName kScenarioNames[] = {
    {ScenarioId::s1, "s1"},
    {ScenarioId::s2_gauss, "s2_gauss"},
    {ScenarioId::s2_bern, "s2_bern"},
    {ScenarioId::s3, "s3"},
    {ScenarioId::s4a_gauss, "s4a_gauss"},
    {ScenarioId::s4a_bern, "s4a_bern"},
    {ScenarioId::s4b_gauss, "s4b_gauss"},
    {ScenarioId::s4b_bern, "s4b_bern"},
};

double probit(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double parse_double(std::string_view text) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

Matrix rows_with_intercept(const Matrix& X, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols() + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out(static_cast<Index>(r), 0) = 1.0;
    out.row(static_cast<Index>(r)).tail(X.cols()) = X.row(rows[r]);
  }
  return out;
}

Vector predict(const GlmFit& fit, const Matrix& X) {
  const Vector eta = (X * fit.theta.tail(X.cols())).array() + fit.theta[0];
  Vector mu(eta.size());
  for (Index i = 0; i < eta.size(); ++i) mu[i] = natural_to_mean(fit.family, eta[i]);
  return mu;
}

// Chooses `count` of `pool` uniformly without replacement (partial shuffle).
std::vector<Index> srs(std::vector<Index> pool, Index count, Rng& rng) {
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

// Intercept giving E[logistic(b0 + s Z)] = prevalence, Z standard normal.
double logistic_intercept(double prevalence, double s) {
  auto mean_prob = [s](double b0) {
    double num = 0.0, den = 0.0;
    for (int k = -800; k <= 800; ++k) {
      const double z = k * 0.01;
      const double phi = std::exp(-0.5 * z * z);
      num += phi / (1.0 + std::exp(-(b0 + s * z)));
      den += phi;
    }
    return num / den;
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_prob(mid) < prevalence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double binomial(Index n, Index k) {
  double out = 1.0;
  for (Index i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

void for_each_combination(Index n, Index k, const std::function<void(const std::vector<Index>&)>& f) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace

Family scenario_family(ScenarioId id) {
  switch (id) {
    case ScenarioId::s2_bern:
    case ScenarioId::s4a_bern:
    case ScenarioId::s4b_bern:
      return Family::bernoulli();
    default:
      return Family::gaussian();
  }
}

std::string_view to_string(ScenarioId id) {
  for (const auto& entry : kScenarioNames) {
    if (entry.id == id) return entry.name;
  }
  return "?";
}

ScenarioId parse_scenario(std::string_view name) {
  for (const auto& entry : kScenarioNames) {
    if (entry.name == name) return entry.id;
  }
  throw DomainError("unknown scenario '" + std::string(name) + "'");
}

Population generate_population(const ScenarioSpec& spec, Rng& rng) {
  if (spec.sample_size < 1 || spec.sample_size >= spec.pop_size) {
    throw DomainError("scenario needs 1 <= n < N");
  }
  const Index N = spec.pop_size;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Population pop{Matrix(N, 1), Vector(N), Vector(N)};
  for (Index i = 0; i < N; ++i) pop.X(i, 0) = normal(rng);
  const bool bern = scenario_family(spec.id).kind == FamilyKind::bernoulli;
  for (Index i = 0; i < N; ++i) {
    const double x = pop.X(i, 0);
    const double log_index = std::log(static_cast<double>(i + 2));  // log(i+1), 1-based
    double sd = 1.0;
    switch (spec.id) {
      case ScenarioId::s1: sd = 1.0; break;
      case ScenarioId::s3: sd = log_index; break;
      default: sd = std::sqrt(std::abs(x)); break;
    }
    pop.y[i] = bern ? (unif(rng) < probit(x) ? 1.0 : 0.0) : x + sd * normal(rng);
    switch (spec.id) {
      case ScenarioId::s4a_gauss:
      case ScenarioId::s4a_bern:
        pop.pi_raw[i] = std::abs(x);
        break;
      case ScenarioId::s4b_gauss:
      case ScenarioId::s4b_bern:
        pop.pi_raw[i] = 1.0 / std::abs(x);
        break;
      default:
        pop.pi_raw[i] = log_index;
    }
  }
  if (spec.id == ScenarioId::s4b_gauss || spec.id == ScenarioId::s4b_bern) {
    const double cap = quantile(std::vector<double>(pop.pi_raw.begin(), pop.pi_raw.end()), 0.999);
    pop.pi_raw = pop.pi_raw.cwiseMin(cap);
  }
  return pop;
}

Population generate_population(const ScenarioSpec& spec, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  return generate_population(spec, rng);
}

InclusionProbabilities inclusion_probabilities(const Vector& size, Index n) {
  const Index N = size.size();
  if (n < 1 || n > N) throw DomainError("sample size must lie in [1, N]");
  for (Index i = 0; i < N; ++i) {
    if (!std::isfinite(size[i]) || size[i] <= 0.0) {
      throw DomainError("size measure must be finite and positive (unit " + std::to_string(i) + ")");
    }
  }
  InclusionProbabilities out{Vector(N), 0, false};
  std::vector<bool> fixed(static_cast<std::size_t>(N), false);
  while (true) {
    double free_total = 0.0;
    for (Index i = 0; i < N; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) free_total += size[i];
    }
    const double free_n = static_cast<double>(n - out.clipped);
    bool changed = false;
    for (Index i = 0; i < N; ++i) {
      if (fixed[static_cast<std::size_t>(i)]) continue;
      out.pi[i] = free_n * size[i] / free_total;
      if (out.pi[i] >= 1.0) {
        out.pi[i] = 1.0;
        fixed[static_cast<std::size_t>(i)] = true;
        ++out.clipped;
        changed = true;
      }
    }
    if (!changed) break;
  }
  out.warning = static_cast<double>(out.clipped) > 0.01 * static_cast<double>(N);
  return out;
}

std::string_view to_string(SamplingScheme scheme) {
  return scheme == SamplingScheme::successive ? "successive" : "systematic";
}

SamplingScheme parse_sampling_scheme(std::string_view name) {
  if (name == "systematic") return SamplingScheme::systematic;
  if (name == "successive") return SamplingScheme::successive;
  throw DomainError("unknown sampling scheme '" + std::string(name) + "'");
}

namespace {

// Successive sampling via exponential keys: the n smallest E_i / size_i are
// distributed as n sequential size-proportional draws without replacement.
std::vector<Index> successive_indices(const Vector& size, Index n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(size.size()));
  for (Index i = 0; i < size.size(); ++i) keys[static_cast<std::size_t>(i)] = {expo(rng) / size[i], i};
  std::nth_element(keys.begin(), keys.begin() + n, keys.end());
  std::vector<Index> out;
  for (Index k = 0; k < n; ++k) out.push_back(keys[static_cast<std::size_t>(k)].second);
  return out;
}

}  // namespace

Sample draw_sample(const Vector& pi_raw, Index n, Rng& rng, SamplingScheme scheme) {
  const Index N = pi_raw.size();
  InclusionProbabilities incl = inclusion_probabilities(pi_raw, n);
  Sample out;
  out.clipped = incl.clipped;
  out.clip_warning = incl.warning;
  DesignLabels labels;
  labels.pop_size = static_cast<double>(N);
  if (scheme == SamplingScheme::successive) {
    out.indices = successive_indices(pi_raw, n, rng);
    std::sort(out.indices.begin(), out.indices.end());
    Vector pi(n);
    for (Index i = 0; i < n; ++i) pi[i] = incl.pi[out.indices[static_cast<std::size_t>(i)]];
    out.design = design_from_pi(pi, labels);
    return out;
  }
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<long double> cum(static_cast<std::size_t>(N) + 1, 0.0L);
  for (Index k = 0; k < N; ++k) {
    cum[static_cast<std::size_t>(k) + 1] = cum[static_cast<std::size_t>(k)] + incl.pi[order[static_cast<std::size_t>(k)]];
  }
  // Rescale so the cumulative total is exactly n.
  const long double scale = static_cast<long double>(n) / cum.back();
  for (auto& c : cum) c *= scale;
  cum.back() = static_cast<long double>(n);
  const long double start = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  Index next = 0;
  for (Index k = 0; k < N && next < n; ++k) {
    const long double point = start + static_cast<long double>(next);
    if (point < cum[static_cast<std::size_t>(k) + 1]) {
      out.indices.push_back(order[static_cast<std::size_t>(k)]);
      ++next;
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  Vector pi(n);
  for (Index i = 0; i < n; ++i) pi[i] = incl.pi[out.indices[static_cast<std::size_t>(i)]];
  out.design = design_from_pi(pi, labels);
  return out;
}

Sample draw_sample(const Vector& pi_raw, Index n, std::uint64_t seed, SamplingScheme scheme) {
  Rng rng = make_stream(seed, 0);
  return draw_sample(pi_raw, n, rng, scheme);
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Aggregate summarize(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("no values to summarise");
  Aggregate out;
  double total = 0.0;
  for (double v : values) total += v;
  out.mean = total / static_cast<double>(values.size());
  out.median = quantile(values, 0.5);
  out.q025 = quantile(values, 0.025);
  out.q975 = quantile(values, 0.975);
  return out;
}

void aggregate(ExperimentSummary& summary) {
  std::vector<double> optimism, omega;
  for (const auto& r : summary.records) {
    optimism.push_back(r.optimism);
    omega.push_back(r.omega_hat);
  }
  summary.optimism = summarize(optimism);
  summary.omega_hat = summarize(omega);
}

ExperimentSummary run_optimism_experiment(const ScenarioSpec& spec, int reps, std::uint64_t seed,
                                          unsigned threads) {
  if (reps < 1) throw DomainError("reps must be at least 1");
  const Family family = scenario_family(spec.id);
  std::vector<std::optional<ReplicateRecord>> slots(static_cast<std::size_t>(reps));
  parallel_for(slots.size(), threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const Population pop = generate_population(spec, rng);
    const Sample sample = draw_sample(pop.pi_raw, spec.sample_size, rng, spec.scheme);
    Vector ys(spec.sample_size);
    for (Index i = 0; i < spec.sample_size; ++i) ys[i] = pop.y[sample.indices[static_cast<std::size_t>(i)]];
    try {
      const GlmFit fit = fit_weighted_glm(rows_with_intercept(pop.X, sample.indices), ys, family,
                                          sample.design);
      const PenaltyReport report = hte_analytic(fit, LossKind::squared_error);
      const Vector mu = predict(fit, pop.X);
      ReplicateRecord rec;
      rec.replicate = static_cast<int>(r);
      rec.err_pop = (pop.y - mu).squaredNorm() / static_cast<double>(spec.pop_size);
      rec.err = report.err_weighted;
      rec.optimism = rec.err_pop - rec.err;
      rec.omega_hat = report.omega_hat;
      rec.err_hat = report.err_hat;
      rec.aic_naive = *report.aic_naive;
      slots[r] = rec;
    } catch (const Error&) {
    }
  });

  ExperimentSummary out;
  out.scenario = spec.id;
  out.scheme = spec.scheme;
  out.pop_size = spec.pop_size;
  out.sample_size = spec.sample_size;
  out.reps = reps;
  out.seed = seed;
  for (auto& slot : slots) {
    if (slot) {
      out.records.push_back(*slot);
    } else {
      ++out.failures;
    }
  }
  if (out.failures > kMaxFailureFraction * reps || out.records.empty()) {
    throw NumericalError(std::to_string(out.failures) + " of " + std::to_string(reps) +
                         " replicates failed to fit");
  }
  aggregate(out);
  return out;
}

void write_records_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << "replicate,err_pop,err,optimism,omega_hat,err_hat,aic_naive\n";
  for (const auto& r : summary.records) {
    out << r.replicate << ',' << format_number(r.err_pop) << ',' << format_number(r.err) << ','
        << format_number(r.optimism) << ',' << format_number(r.omega_hat) << ','
        << format_number(r.err_hat) << ',' << format_number(r.aic_naive) << '\n';
  }
}

std::vector<ReplicateRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty records file");
  std::vector<ReplicateRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 7) throw IoError("records row has " + std::to_string(f.size()) + " fields");
    ReplicateRecord r;
    r.replicate = static_cast<int>(parse_double(f[0]));
    r.err_pop = parse_double(f[1]);
    r.err = parse_double(f[2]);
    r.optimism = parse_double(f[3]);
    r.omega_hat = parse_double(f[4]);
    r.err_hat = parse_double(f[5]);
    r.aic_naive = parse_double(f[6]);
    out.push_back(r);
  }
  return out;
}

std::string summary_json(const ExperimentSummary& summary) {
  auto agg = [](const Aggregate& a) {
    return nlohmann::ordered_json{{"mean", a.mean}, {"median", a.median}, {"q025", a.q025}, {"q975", a.q975}};
  };
  nlohmann::ordered_json j;
  j["scenario"] = std::string(to_string(summary.scenario));
  j["sampling"] = std::string(to_string(summary.scheme));
  j["pop_size"] = summary.pop_size;
  j["sample_size"] = summary.sample_size;
  j["reps"] = summary.reps;
  j["seed"] = summary.seed;
  j["failures"] = summary.failures;
  j["optimism"] = agg(summary.optimism);
  j["omega_hat"] = agg(summary.omega_hat);
  return j.dump(2) + "\n";
}

Index case_control_pop_size(const CaseControlSpec& spec) {
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0) ||
      !(spec.sample_case_fraction > 0.0 && spec.sample_case_fraction < 1.0)) {
    throw DomainError("prevalence and sample case fraction must lie in (0, 1)");
  }
  if (spec.pop_size > 0) return spec.pop_size;
  const double cases = std::round(spec.sample_case_fraction * static_cast<double>(spec.sample_size));
  return std::max<Index>(200000, static_cast<Index>(std::ceil(4.0 * cases / spec.prevalence)));
}

RelativeErrorCell run_relative_error_cell(const CaseControlSpec& spec, int reps, std::uint64_t seed,
                                          unsigned threads, double max_failure_fraction) {
  if (reps < 1) throw DomainError("reps must be at least 1");
  const Index N = case_control_pop_size(spec);
  const Index n = spec.sample_size;
  const Index n_case = static_cast<Index>(std::round(spec.sample_case_fraction * static_cast<double>(n)));
  if (n_case < 1 || n - n_case < 1 || n >= N) throw DomainError("sample allocation leaves an empty stratum");
  const Family family = spec.family == FamilyKind::gaussian  ? Family::gaussian()
                        : spec.family == FamilyKind::poisson ? Family::poisson()
                                                             : Family::bernoulli();
  const LossKind loss = spec.family == FamilyKind::gaussian ? LossKind::squared_error : LossKind::deviance;
  const double b0 = spec.family == FamilyKind::bernoulli ? logistic_intercept(spec.prevalence, std::sqrt(1.25)) : 0.0;

  std::vector<std::optional<RelativeErrorRecord>> slots(static_cast<std::size_t>(reps));
  parallel_for(slots.size(), threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix X(N, 2);
    Vector eta(N), y(N);
    for (Index i = 0; i < N; ++i) {
      X(i, 0) = normal(rng);
      X(i, 1) = normal(rng);
      eta[i] = b0 + X(i, 0) + 0.5 * X(i, 1);
    }
    std::vector<bool> is_case(static_cast<std::size_t>(N));
    switch (spec.family) {
      case FamilyKind::bernoulli:
        for (Index i = 0; i < N; ++i) y[i] = unif(rng) < natural_to_mean(family, eta[i]) ? 1.0 : 0.0;
        for (Index i = 0; i < N; ++i) is_case[static_cast<std::size_t>(i)] = y[i] == 1.0;
        break;
      case FamilyKind::gaussian:
      case FamilyKind::poisson: {
        if (spec.family == FamilyKind::gaussian) {
          for (Index i = 0; i < N; ++i) y[i] = eta[i] + normal(rng);
        } else {
          for (Index i = 0; i < N; ++i) {
            std::poisson_distribution<long long> pois(std::exp(eta[i]));
            y[i] = static_cast<double>(pois(rng));
          }
        }
        const auto top = static_cast<Index>(std::ceil(spec.prevalence * static_cast<double>(N)));
        std::vector<double> sorted(eta.begin(), eta.end());
        std::nth_element(sorted.begin(), sorted.begin() + (N - top), sorted.end());
        const double threshold = sorted[static_cast<std::size_t>(N - top)];
        for (Index i = 0; i < N; ++i) is_case[static_cast<std::size_t>(i)] = eta[i] >= threshold;
        break;
      }
    }
    std::vector<Index> cases, controls;
    for (Index i = 0; i < N; ++i) (is_case[static_cast<std::size_t>(i)] ? cases : controls).push_back(i);
    const auto n_cases_pop = static_cast<Index>(cases.size());
    const auto n_controls_pop = static_cast<Index>(controls.size());
    if (n_cases_pop < n_case || n_controls_pop < n - n_case) return;

    std::vector<Index> chosen = srs(cases, n_case, rng);
    const std::vector<Index> chosen_controls = srs(controls, n - n_case, rng);
    chosen.insert(chosen.end(), chosen_controls.begin(), chosen_controls.end());
    Vector pi(n), ys(n);
    DesignLabels labels;
    labels.pop_size = static_cast<double>(N);
    for (Index k = 0; k < n; ++k) {
      const bool case_unit = k < n_case;
      pi[k] = case_unit ? static_cast<double>(n_case) / static_cast<double>(n_cases_pop)
                        : static_cast<double>(n - n_case) / static_cast<double>(n_controls_pop);
      labels.strata.push_back(case_unit ? 1 : 0);
      ys[k] = y[chosen[static_cast<std::size_t>(k)]];
    }
    try {
      const GlmFit fit = fit_weighted_glm(rows_with_intercept(X, chosen), ys, family, design_from_pi(pi, labels));
      const PenaltyReport report = hte_analytic(fit, loss);
      const Loss scoring = fit_loss(fit, loss);
      std::vector<bool> sampled(static_cast<std::size_t>(N), false);
      for (Index i : chosen) sampled[static_cast<std::size_t>(i)] = true;
      double total = 0.0;
      for (Index i = 0; i < N; ++i) {
        if (sampled[static_cast<std::size_t>(i)]) continue;
        const double mu = natural_to_mean(family, fit.theta[0] + fit.theta.tail(2).dot(X.row(i)));
        total += loss_q(scoring, y[i], mu);
      }
      RelativeErrorRecord rec;
      rec.replicate = static_cast<int>(r);
      rec.err_true = total / static_cast<double>(N - n);
      rec.err_hat = report.err_hat;
      rec.aic = *report.aic_naive;
      rec.rel_hte = std::abs(rec.err_hat - rec.err_true) / rec.err_true;
      rec.rel_aic = std::abs(rec.aic - rec.err_true) / rec.err_true;
      if (std::isfinite(rec.rel_hte) && std::isfinite(rec.rel_aic)) slots[r] = rec;
    } catch (const Error&) {
    }
  });

  RelativeErrorCell cell;
  cell.spec = spec;
  cell.pop_size = N;
  cell.reps = reps;
  double ratio_total = 0.0;
  for (auto& slot : slots) {
    if (!slot) {
      ++cell.failures;
      continue;
    }
    cell.records.push_back(*slot);
    cell.mean_rel_hte += slot->rel_hte;
    cell.mean_rel_aic += slot->rel_aic;
    ratio_total += slot->rel_hte / slot->rel_aic;
  }
  if (cell.failures > max_failure_fraction * reps || cell.records.empty()) {
    throw NumericalError(std::to_string(cell.failures) + " of " + std::to_string(reps) +
                         " replicates failed in the relative-error experiment");
  }
  const double m = static_cast<double>(cell.records.size());
  cell.mean_rel_hte /= m;
  cell.mean_rel_aic /= m;
  cell.ratio_of_means = cell.mean_rel_hte / cell.mean_rel_aic;
  cell.mean_of_ratios = ratio_total / m;
  return cell;
}

std::vector<RelativeErrorCell> run_relative_error_experiment(const std::vector<CaseControlSpec>& grid,
                                                             int reps, std::uint64_t seed,
                                                             unsigned threads,
                                                             double max_failure_fraction) {
  std::vector<RelativeErrorCell> out;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    out.push_back(run_relative_error_cell(grid[c], reps, mix64(seed + c), threads, max_failure_fraction));
  }
  return out;
}

void write_relative_error_csv(std::ostream& out, const std::vector<RelativeErrorCell>& cells) {
  out << "family,prevalence,sample_size,pop_size,reps,failures,mean_rel_hte,mean_rel_aic,"
         "ratio_of_means,mean_of_ratios\n";
  for (const auto& c : cells) {
    out << to_string(c.spec.family) << ',' << format_number(c.spec.prevalence) << ','
        << c.spec.sample_size << ',' << c.pop_size << ',' << c.reps << ',' << c.failures << ','
        << format_number(c.mean_rel_hte) << ',' << format_number(c.mean_rel_aic) << ','
        << format_number(c.ratio_of_means) << ',' << format_number(c.mean_of_ratios) << '\n';
  }
}

EnumeratedDesign enumerate_design(const TinySpec& spec) {
  const Index N = spec.pop_size;
  if (N > 12) throw DomainError("enumeration is limited to N <= 12");
  if (spec.sample_size < 1 || spec.sample_size >= N) throw DomainError("need 1 <= n < N");
  EnumeratedDesign out;
  out.pi = Vector::Zero(N);
  if (!spec.stratum_sizes.empty()) {
    const std::size_t H = spec.stratum_sizes.size();
    if (spec.stratum_sample_sizes.size() != H) throw DomainError("stratum sizes and sample sizes differ in length");
    Index total = 0, total_n = 0;
    for (std::size_t h = 0; h < H; ++h) {
      if (spec.stratum_sample_sizes[h] < 1 || spec.stratum_sample_sizes[h] > spec.stratum_sizes[h]) {
        throw DomainError("stratum sample size out of range");
      }
      for (Index i = 0; i < spec.stratum_sizes[h]; ++i) out.strata.push_back(static_cast<Label>(h));
      total += spec.stratum_sizes[h];
      total_n += spec.stratum_sample_sizes[h];
    }
    if (total != N || total_n != spec.sample_size) throw DomainError("strata do not add up to N and n");
    // Cartesian product of per-stratum combinations.
    std::vector<std::vector<std::vector<Index>>> per_stratum(H);
    Index offset = 0;
    double prob = 1.0;
    for (std::size_t h = 0; h < H; ++h) {
      for_each_combination(spec.stratum_sizes[h], spec.stratum_sample_sizes[h], [&](const std::vector<Index>& c) {
        std::vector<Index> units;
        for (Index i : c) units.push_back(offset + i);
        per_stratum[h].push_back(units);
      });
      prob /= binomial(spec.stratum_sizes[h], spec.stratum_sample_sizes[h]);
      offset += spec.stratum_sizes[h];
    }
    std::vector<std::size_t> pos(H, 0);
    while (true) {
      EnumeratedSample s;
      s.probability = prob;
      for (std::size_t h = 0; h < H; ++h) {
        const auto& u = per_stratum[h][pos[h]];
        s.units.insert(s.units.end(), u.begin(), u.end());
      }
      out.samples.push_back(std::move(s));
      std::size_t h = 0;
      while (h < H && ++pos[h] == per_stratum[h].size()) pos[h++] = 0;
      if (h == H) break;
    }
  } else {
    std::vector<double> size = spec.size;
    if (size.empty()) {
      for (Index i = 0; i < N; ++i) size.push_back(static_cast<double>(i + 1));
    }
    if (static_cast<Index>(size.size()) != N) throw DomainError("size vector must have N entries");
    double total = 0.0;
    for_each_combination(N, spec.sample_size, [&](const std::vector<Index>& c) {
      double p = 1.0;
      for (Index i : c) p *= size[static_cast<std::size_t>(i)];
      out.samples.push_back({c, p});
      total += p;
    });
    for (auto& s : out.samples) s.probability /= total;
  }
  for (const auto& s : out.samples) {
    for (Index i : s.units) out.pi[i] += s.probability;
  }
  return out;
}

BruteForceResult brute_force_optimism(const TinySpec& spec, int draws, std::uint64_t seed) {
  if (draws < 2) throw DomainError("need at least two superpopulation draws");
  const EnumeratedDesign design = enumerate_design(spec);
  const Index N = spec.pop_size;
  const double sigma2 = spec.sigma * spec.sigma;
  double sum_err = 0.0, sum_hat = 0.0, sum_d = 0.0, sum_d2 = 0.0;
  for (int d = 0; d < draws; ++d) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(d));
    std::normal_distribution<double> normal(spec.mean, spec.sigma);
    Vector y(N);
    for (Index i = 0; i < N; ++i) y[i] = normal(rng);
    double e_err = 0.0, e_hat = 0.0;
    for (const auto& s : design.samples) {
      const auto n = static_cast<Index>(s.units.size());
      Vector pi(n), ys(n);
      DesignLabels labels;
      labels.pop_size = static_cast<double>(N);
      for (Index k = 0; k < n; ++k) {
        const Index i = s.units[static_cast<std::size_t>(k)];
        pi[k] = design.pi[i];
        ys[k] = y[i];
        if (!design.strata.empty()) labels.strata.push_back(design.strata[static_cast<std::size_t>(i)]);
      }
      const SurveyDesign sd = design_from_pi(pi, labels);
      const double W = sd.weights.sum();
      const double mu_hat = sd.weights.dot(ys) / W;
      const double err = in_sample_error(Loss::squared_error(), ys, Vector::Constant(n, mu_hat), sd);
      const double penalty = 2.0 * sd.weights.squaredNorm() * sigma2 / (W * static_cast<double>(N));
      e_hat += s.probability * (err + penalty);
      e_err += s.probability * (sigma2 + (spec.mean - mu_hat) * (spec.mean - mu_hat));
    }
    sum_err += e_err;
    sum_hat += e_hat;
    sum_d += e_hat - e_err;
    sum_d2 += (e_hat - e_err) * (e_hat - e_err);
  }
  BruteForceResult out;
  out.draws = draws;
  out.expected_err = sum_err / draws;
  out.expected_err_hat = sum_hat / draws;
  const double mean_d = sum_d / draws;
  const double var_d = (sum_d2 - draws * mean_d * mean_d) / (draws - 1);
  out.se_difference = std::sqrt(std::max(0.0, var_d) / draws);
  return out;
}

}  // namespace hte
