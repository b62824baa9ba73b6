#include "noisycp/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "noisycp/error.hpp"
#include "noisycp/guarantees.hpp"
#include "noisycp/linalg.hpp"
#include "noisycp/parallel.hpp"
#include "noisycp/random.hpp"

namespace noisycp {
namespace {

constexpr double kTrivialQ = std::numeric_limits<double>::infinity();

bool wants(const ExperimentConfig& config, EvalMethod m) {
  return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
}

struct MethodOutcome {
  double q = 0.0;
  double delta = 0.0;
  bool trivial = false;
  bool failed = false;
};

struct SplitResult {
  std::vector<SplitRecord> records;
  std::optional<bool> order_ok;
  std::optional<bool> delta_ok;
};

// Everything that depends only on the pool and config, computed once.
struct SharedState {
  ScoreTable scores;
  std::size_t n_cal = 0;
  std::size_t k = 0;
  Matrix p;
  std::optional<double> epsilon;  // set for uniform noise
  std::optional<InvertedNoise> inverse;
  ClassMarginals marginals;
  std::optional<MonteCarloEstimate> c_n;
  std::optional<double> crcp_delta;
  std::optional<double> nacp_delta;
};

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed, std::size_t split) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterStream stream(seed, StreamDomain::Split, split);
  std::shuffle(perm.begin(), perm.end(), stream);
  return perm;
}

std::vector<int> pick(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

SplitResult run_split(const NoisyPool& pool, const ExperimentConfig& config, const SharedState& shared,
                      std::size_t split) {
  std::vector<std::size_t> perm = split_permutation(pool.size(), config.seed, split);
  std::span<std::size_t> cal_idx(perm.data(), shared.n_cal);
  std::span<std::size_t> test_idx(perm.data() + shared.n_cal, perm.size() - shared.n_cal);
  std::sort(cal_idx.begin(), cal_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  const ScoreTable cal = shared.scores.select_rows(cal_idx);
  const ScoreTable test = shared.scores.select_rows(test_idx);
  const std::vector<int> cal_clean = pick(pool.clean_labels, cal_idx);
  const std::vector<int> cal_noisy = pick(pool.noisy_labels, cal_idx);
  const std::vector<int> test_clean = pick(pool.clean_labels, test_idx);
  const std::vector<int> test_noisy = pick(pool.noisy_labels, test_idx);
  const double level = 1.0 - config.alpha;
  const CoverageSpec spec{config.alpha, config.delta_conf};

  std::vector<std::pair<EvalMethod, MethodOutcome>> outcomes;

  if (wants(config, EvalMethod::Oracle)) {
    outcomes.emplace_back(EvalMethod::Oracle,
                          MethodOutcome{standard_cp(cal.label_scores(cal_clean), config.alpha).q});
  }
  std::optional<double> noisy_q;
  if (wants(config, EvalMethod::NoisyCP)) {
    noisy_q = standard_cp(cal.label_scores(cal_noisy), config.alpha, ThresholdMethod::NoisyCP).q;
    outcomes.emplace_back(EvalMethod::NoisyCP, MethodOutcome{*noisy_q});
  }

  const bool any_robust = wants(config, EvalMethod::NRCP_noDelta) || wants(config, EvalMethod::NACP) ||
                          wants(config, EvalMethod::ACNL_adjusted) ||
                          wants(config, EvalMethod::CRCP_adjusted);
  std::optional<CalibrationCurve> curve;
  std::vector<double> noisy_scores;
  if (any_robust) {
    BreakpointMode mode = BreakpointMode::Exact;
    std::vector<double> bps = candidate_breakpoints(cal, config.search.curve, &mode);
    curve = shared.epsilon ? build_curve(cal, cal_noisy, *shared.epsilon, std::move(bps))
                           : build_curve_general(cal, cal_noisy, *shared.inverse, std::move(bps));
    curve->mode = mode;
    noisy_scores = cal.label_scores(cal_noisy);
  }

  auto robust = [&](double delta) {
    MethodOutcome o;
    o.delta = delta;
    const AdjustedLevel adjusted = apply_correction(spec, delta);
    if (adjusted.trivial_set) {
      o.q = kTrivialQ;
      o.trivial = true;
      return o;
    }
    try {
      if (shared.epsilon) {
        const SearchBracket b = search_bracket(noisy_scores, adjusted.level, *shared.epsilon, shared.k);
        o.q = search_curve(*curve, adjusted.level, b.q1, b.q2, config.search.largest_solution).q;
      } else {
        o.q = search_curve(*curve, adjusted.level, curve->breakpoints.front(), curve->breakpoints.back(),
                           config.search.largest_solution)
                  .q;
      }
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
      o.failed = true;
    }
    return o;
  };

  std::optional<MethodOutcome> nrcp;
  if (wants(config, EvalMethod::NRCP_noDelta)) {
    nrcp = robust(0.0);
    outcomes.emplace_back(EvalMethod::NRCP_noDelta, *nrcp);
  }
  std::optional<MethodOutcome> nacp;
  if (wants(config, EvalMethod::NACP)) {
    nacp = robust(*shared.nacp_delta);
    outcomes.emplace_back(EvalMethod::NACP, *nacp);
  }
  if (wants(config, EvalMethod::ACNL_adjusted)) {
    MethodOutcome o;
    try {
      ClassMarginals m = shared.marginals;
      std::vector<std::size_t> counts(shared.k, 0);
      for (int y : cal_noisy) ++counts[static_cast<std::size_t>(y)];
      m.noisy_counts = std::move(counts);
      AcnlOptions opts;
      opts.c_n = shared.c_n;
      o = robust(delta_acnl(shared.n_cal, shared.p, m, opts).delta_value);
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
      o.failed = true;
    }
    outcomes.emplace_back(EvalMethod::ACNL_adjusted, o);
  }
  if (wants(config, EvalMethod::CRCP_adjusted)) {
    MethodOutcome o;
    if (shared.crcp_delta) {
      o = robust(*shared.crcp_delta);
    } else {
      o.failed = true;
    }
    outcomes.emplace_back(EvalMethod::CRCP_adjusted, o);
  }

  SplitResult result;
  std::optional<double> nrcp_coverage;
  std::optional<double> nacp_coverage;
  for (const auto& [method, o] : outcomes) {
    SplitRecord r;
    r.split = split;
    r.method = method;
    r.q = o.q;
    r.delta = o.delta;
    r.trivial_set = o.trivial;
    r.failed = o.failed;
    if (!o.failed) {
      const CoverageSize clean = coverage_and_size(test, test_clean, o.q);
      r.coverage = clean.coverage;
      r.size = clean.avg_size;
      r.noisy_coverage = coverage_and_size(test, test_noisy, o.q).coverage;
      if (method == EvalMethod::NRCP_noDelta) nrcp_coverage = r.coverage;
      if (method == EvalMethod::NACP) nacp_coverage = r.coverage;
    }
    result.records.push_back(r);
  }

  if (shared.epsilon && noisy_q && nrcp && !nrcp->failed) {
    const double fr = random_label_coverage(cal, *noisy_q);
    result.order_ok = (nrcp->q <= *noisy_q) == (fr <= level);
  }
  if (nrcp_coverage && nacp_coverage) result.delta_ok = *nacp_coverage >= *nrcp_coverage;
  return result;
}

}  // namespace

std::string_view eval_method_name(EvalMethod method) {
  switch (method) {
    case EvalMethod::Oracle: return "oracle";
    case EvalMethod::NoisyCP: return "noisy_cp";
    case EvalMethod::NRCP_noDelta: return "nrcp";
    case EvalMethod::NACP: return "nacp";
    case EvalMethod::ACNL_adjusted: return "acnl";
    case EvalMethod::CRCP_adjusted: return "crcp";
  }
  return "unknown";
}

EvalMethod parse_eval_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (EvalMethod m : all_eval_methods()) {
    if (eval_method_name(m) == lower) return m;
  }
  if (lower == "noisycp" || lower == "noisy") return EvalMethod::NoisyCP;
  if (lower == "nrcp_nodelta" || lower == "nr-cp") return EvalMethod::NRCP_noDelta;
  throw Error(Errc::InvalidArgument, "unknown evaluation method '" + std::string(name) + "'");
}

std::vector<EvalMethod> all_eval_methods() {
  return {EvalMethod::Oracle,  EvalMethod::NoisyCP,       EvalMethod::NRCP_noDelta,
          EvalMethod::NACP,    EvalMethod::ACNL_adjusted, EvalMethod::CRCP_adjusted};
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw Error(Errc::InvalidConfig, "no methods selected");
  score.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidConfig, "alpha must lie in (0,1)");
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) throw Error(Errc::InvalidConfig, "delta must lie in (0,1)");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw Error(Errc::InvalidConfig, "split fraction must lie in (0,1)");
  }
  if (n_splits < 1) throw Error(Errc::InvalidConfig, "n_splits must be >= 1");
  validate_noise_model(noise);
  if (std::holds_alternative<GeneralNoise>(noise) &&
      std::find(methods.begin(), methods.end(), EvalMethod::NACP) != methods.end()) {
    throw Error(Errc::InvalidConfig, "the NACP correction is defined for uniform noise only");
  }
}

NoisyPool NoisyPool::validate(ProbabilityMatrix probs, std::vector<int> clean, std::vector<int> noisy) {
  if (clean.size() != probs.rows() || noisy.size() != probs.rows()) {
    throw Error(Errc::InvalidArgument, "label files do not match the probability rows");
  }
  validate_labels(clean, probs.classes());
  validate_labels(noisy, probs.classes());
  return NoisyPool{std::move(probs), std::move(clean), std::move(noisy)};
}

CoverageSize coverage_and_size(const ScoreTable& scores, std::span<const int> labels, double q) {
  if (labels.size() != scores.rows()) throw Error(Errc::InvalidArgument, "label count mismatch");
  if (scores.rows() == 0) return {};
  validate_labels(labels, scores.classes());
  std::size_t covered = 0;
  std::size_t members = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (double s : scores.row(i)) members += (s <= q);
    covered += scores(i, static_cast<std::size_t>(labels[i])) <= q;
  }
  const auto n = static_cast<double>(scores.rows());
  return {static_cast<double>(covered) / n, static_cast<double>(members) / n};
}

CoverageSize coverage_and_size(const LabeledSet& test, double q, const ScoreParams& params) {
  return coverage_and_size(ScoreTable::compute(test.probs, params), test.labels, q);
}

const MethodSummary* TrialReport::find(EvalMethod method) const {
  for (const auto& m : methods)
    if (m.method == method) return &m;
  return nullptr;
}

TrialReport run_experiment(const NoisyPool& pool, const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = pool.size();
  if (n < 2) throw Error(Errc::InvalidArgument, "pool needs at least 2 samples to split");

  SharedState shared;
  shared.k = pool.probs.classes();
  shared.n_cal = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.split_fraction * static_cast<double>(n))), 1, n - 1);
  shared.scores = ScoreTable::compute(pool.probs, config.score);
  shared.p = noise_matrix(config.noise, shared.k);
  if (const auto* u = std::get_if<UniformNoise>(&config.noise)) {
    shared.epsilon = u->epsilon;
  } else {
    shared.inverse = invert_noise_matrix(shared.p);
  }

  const bool need_marginals = wants(config, EvalMethod::ACNL_adjusted) || wants(config, EvalMethod::CRCP_adjusted);
  if (need_marginals) shared.marginals = ClassMarginals::from_prior(config.class_prior, shared.p);
  if (wants(config, EvalMethod::NACP)) {
    shared.nacp_delta = delta_nacp(shared.n_cal, *shared.epsilon, config.delta_conf).delta_value;
  }
  if (wants(config, EvalMethod::ACNL_adjusted)) {
    shared.c_n = c_n_estimate(shared.n_cal, config.acnl_mc_samples, config.seed, config.threads);
  }
  if (wants(config, EvalMethod::CRCP_adjusted)) {
    try {
      shared.crcp_delta = delta_crcp(shared.n_cal, shared.p, shared.marginals).delta_value;
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
    }
  }

  std::vector<SplitResult> splits(config.n_splits);
  parallel_for(config.n_splits, config.threads,
               [&](std::size_t s) { splits[s] = run_split(pool, config, shared, s); });

  TrialReport report;
  report.n_splits = config.n_splits;
  report.n_calibration = shared.n_cal;
  report.n_test = n - shared.n_cal;
  report.k = shared.k;
  report.alpha = config.alpha;

  for (EvalMethod method : config.methods) {
    MethodSummary summary;
    summary.method = method;
    std::vector<double> cov, size, noisy_cov, qs, deltas;
    std::size_t trivial = 0;
    for (const auto& split : splits) {
      for (const auto& r : split.records) {
        if (r.method != method) continue;
        if (r.failed) {
          ++summary.failures;
          continue;
        }
        cov.push_back(r.coverage);
        size.push_back(r.size);
        noisy_cov.push_back(r.noisy_coverage);
        deltas.push_back(r.delta);
        if (r.trivial_set) {
          ++trivial;
        } else {
          qs.push_back(r.q);
        }
      }
    }
    summary.completed = cov.size();
    summary.mean_coverage = mean_of(cov);
    summary.std_coverage = std_of(cov);
    summary.mean_size = mean_of(size);
    summary.std_size = std_of(size);
    summary.mean_noisy_coverage = mean_of(noisy_cov);
    summary.mean_q = mean_of(qs);
    summary.mean_delta = mean_of(deltas);
    summary.trivial_rate = cov.empty() ? 0.0 : static_cast<double>(trivial) / static_cast<double>(cov.size());
    report.methods.push_back(summary);
  }

  for (auto& split : splits) {
    if (split.order_ok) {
      ++report.order_checks;
      if (!*split.order_ok) ++report.order_violations;
    }
    if (split.delta_ok) {
      ++report.delta_checks;
      if (!*split.delta_ok) ++report.delta_violations;
    }
    if (config.keep_split_records) {
      report.records.insert(report.records.end(), split.records.begin(), split.records.end());
    }
  }
  return report;
}

void write_report_table(std::ostream& out, const TrialReport& report) {
  out << "splits=" << report.n_splits << " calibration=" << report.n_calibration
      << " test=" << report.n_test << " classes=" << report.k << " alpha=" << report.alpha << '\n';
  out << std::left << std::setw(10) << "method" << std::right << std::setw(20) << "size"
      << std::setw(22) << "coverage(%)" << std::setw(10) << "delta" << std::setw(10) << "trivial"
      << std::setw(10) << "failed" << '\n';
  out << std::fixed;
  for (const auto& m : report.methods) {
    std::ostringstream size, cov;
    size << std::fixed << std::setprecision(2) << m.mean_size << " +- " << m.std_size;
    cov << std::fixed << std::setprecision(2) << 100.0 * m.mean_coverage << " +- "
        << 100.0 * m.std_coverage;
    out << std::left << std::setw(10) << eval_method_name(m.method) << std::right << std::setw(20)
        << size.str() << std::setw(22) << cov.str() << std::setw(10) << std::setprecision(4)
        << m.mean_delta << std::setw(10) << std::setprecision(3) << m.trivial_rate << std::setw(10)
        << m.failures << '\n';
  }
  out.unsetf(std::ios::fixed);
  if (report.order_checks > 0) {
    out << "size-order check: " << report.order_checks - report.order_violations << "/"
        << report.order_checks << " splits consistent\n";
  }
}

void write_split_csv(std::ostream& out, const TrialReport& report) {
  out << "split,method,q,delta,coverage,size,noisy_coverage,trivial_set,failed\n";
  out << std::setprecision(17);
  for (const auto& r : report.records) {
    out << r.split << ',' << eval_method_name(r.method) << ',' << r.q << ',' << r.delta << ','
        << r.coverage << ',' << r.size << ',' << r.noisy_coverage << ',' << (r.trivial_set ? 1 : 0)
        << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

}  // namespace noisycp
