#include "noisycp/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "noisycp/cli/io.hpp"
#include "noisycp/error.hpp"
#include "noisycp/linalg.hpp"
#include "noisycp/synth.hpp"

namespace noisycp::cli {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json score_to_json(const ScoreParams& p) {
  return {{"kind", score_kind_name(p.kind)},
          {"raps_a", p.raps_a},
          {"raps_b", p.raps_b},
          {"randomized", p.randomized},
          {"seed", p.seed}};
}

ScoreParams score_from_json(const json& j) {
  ScoreParams p;
  p.kind = parse_score_kind(j.at("kind").get<std::string>());
  p.raps_a = j.value("raps_a", p.raps_a);
  p.raps_b = j.value("raps_b", p.raps_b);
  p.randomized = j.value("randomized", false);
  p.seed = j.value("seed", std::uint64_t{0});
  p.validate();
  return p;
}

void write_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

void write_text(std::ostream& out, const json& j) {
  for (const auto& [key, value] : j.items()) {
    out << key << ": ";
    if (value.is_string()) {
      out << value.get<std::string>();
    } else {
      out << value.dump();
    }
    out << '\n';
  }
}

void save_json(const std::filesystem::path& path, const json& j) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  f << j.dump(2) << '\n';
}

double epsilon_or_nan(const NoiseModel& noise) {
  if (const auto* u = std::get_if<UniformNoise>(&noise)) return u->epsilon;
  return std::numeric_limits<double>::quiet_NaN();
}

void check_matrix_size(const NoiseModel& noise, std::size_t k) {
  if (const auto* g = std::get_if<GeneralNoise>(&noise); g && g->p.rows() != k) {
    throw Error(Errc::InvalidArgument, "noise matrix is " + std::to_string(g->p.rows()) + "x" +
                                           std::to_string(g->p.cols()) + " but the data has " +
                                           std::to_string(k) + " classes");
  }
}

json term_to_json(const CorrectionTerm& t) {
  json j = {{"method", correction_method_name(t.method)},
            {"delta", t.delta_value},
            {"n", t.n},
            {"k", t.k},
            {"epsilon", number_or_null(t.epsilon)}};
  switch (t.method) {
    case CorrectionMethod::NACP:
      j["delta_conf"] = t.delta_conf;
      j["h"] = t.h;
      break;
    case CorrectionMethod::ACNL:
      j["mc_samples"] = t.mc_samples;
      j["c_n"] = t.c_n;
      j["c_n_stderr"] = t.c_n_stderr;
      j["n_star"] = t.n_star;
      j["n_star_source"] = t.expected_counts ? "expected" : "observed";
      break;
    case CorrectionMethod::CRCP:
      break;
  }
  return j;
}

CorrectionTerm compute_term(CorrectionMethod method, std::size_t n, const NoiseModel& noise, std::size_t k,
                            double delta_conf, const std::vector<double>& priors,
                            const std::optional<std::vector<std::size_t>>& counts, std::size_t mc_samples,
                            std::uint64_t seed, std::size_t threads) {
  if (method == CorrectionMethod::NACP) {
    const auto* u = std::get_if<UniformNoise>(&noise);
    if (!u) throw Error(Errc::InvalidArgument, "the nacp correction requires --epsilon");
    return delta_nacp(n, u->epsilon, delta_conf);
  }
  const Matrix p = noise_matrix(noise, k);
  ClassMarginals m = ClassMarginals::from_prior(priors, p);
  m.noisy_counts = counts;
  CorrectionTerm term;
  if (method == CorrectionMethod::ACNL) {
    AcnlOptions opts;
    opts.mc_samples = mc_samples;
    opts.seed = seed;
    opts.threads = threads;
    term = delta_acnl(n, p, m, opts);
  } else {
    term = delta_crcp(n, p, m);
  }
  term.epsilon = epsilon_or_nan(noise);
  return term;
}

std::vector<std::size_t> class_counts(const std::vector<int>& labels, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

}  // namespace

NoiseModel NoiseArgs::resolve() const {
  if (epsilon && !matrix_path.empty()) {
    throw Error(Errc::InvalidArgument, "--epsilon and --noise-matrix are mutually exclusive");
  }
  if (!epsilon && matrix_path.empty()) {
    throw Error(Errc::InvalidArgument, "one of --epsilon or --noise-matrix is required");
  }
  NoiseModel noise = epsilon ? NoiseModel{UniformNoise{*epsilon}} : NoiseModel{GeneralNoise{read_matrix(matrix_path)}};
  validate_noise_model(noise);
  return noise;
}

int cmd_simulate(const SimulateOptions& options, const GlobalOptions& global, std::ostream& out) {
  const NoiseModel noise = options.noise.resolve();
  check_matrix_size(noise, options.k);
  SynthConfig config;
  config.k = options.k;
  config.n = options.n;
  config.class_prior = options.priors;
  config.signal_mu = options.signal_mu;
  config.logit_sigma = options.logit_sigma;
  config.seed = options.seed;
  const LabeledSet data = generate(config, global.threads);
  const std::vector<int> noisy = inject_noise(data.labels, options.k, noise, options.seed);

  const auto probs_path = options.out_dir / "probs.csv";
  const auto clean_path = options.out_dir / "labels_clean.csv";
  const auto noisy_path = options.out_dir / "labels_noisy.csv";
  write_probabilities(probs_path, data.probs);
  write_labels(clean_path, data.labels);
  write_labels(noisy_path, noisy);

  std::size_t flips = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) flips += noisy[i] != data.labels[i];
  const json summary = {{"n", options.n},
                        {"k", options.k},
                        {"seed", options.seed},
                        {"epsilon", number_or_null(epsilon_or_nan(noise))},
                        {"top1_accuracy", top1_accuracy(data)},
                        {"flip_rate", static_cast<double>(flips) / static_cast<double>(noisy.size())},
                        {"probs", probs_path.string()},
                        {"labels_clean", clean_path.string()},
                        {"labels_noisy", noisy_path.string()}};
  global.format == OutputFormat::Json ? write_json(out, summary) : write_text(out, summary);
  return kOk;
}

json calibrate_report(const CalibrateOptions& options, const GlobalOptions& global) {
  const CoverageSpec spec = CoverageSpec::validate(options.alpha, options.delta);
  options.score.validate();
  const LabeledSet calib = LabeledSet::validate(read_probabilities(options.probs), read_labels(options.labels));
  const NoiseModel noise = options.noise.resolve();
  const std::size_t k = calib.classes();
  const std::size_t n = calib.size();
  check_matrix_size(noise, k);
  const double eps = epsilon_or_nan(noise);
  const ScoreTable table = ScoreTable::compute(calib.probs, options.score);

  json report = {{"method", options.method},
                 {"alpha", options.alpha},
                 {"n", n},
                 {"k", k},
                 {"noise", std::holds_alternative<UniformNoise>(noise) ? "uniform" : "general"},
                 {"epsilon", number_or_null(eps)},
                 {"score", score_to_json(options.score)},
                 {"largest_solution", options.search.largest_solution},
                 {"delta", nullptr},
                 {"trivial_set", false}};

  if (options.method == "standard") {
    const bool clean = std::holds_alternative<UniformNoise>(noise) && eps == 0.0;
    const ThresholdResult r = standard_cp(table.label_scores(calib.labels), options.alpha,
                                          clean ? ThresholdMethod::StandardCP : ThresholdMethod::NoisyCP);
    report["threshold_method"] = threshold_method_name(r.method);
    report["q"] = r.q;
    report["q1"] = nullptr;
    report["q2"] = nullptr;
    report["achieved_fc"] = r.achieved_fc;
    report["target_level"] = r.target_level;
    report["breakpoint_count"] = r.breakpoint_count;
    report["breakpoint_mode"] = nullptr;
    report["extended_search"] = false;
    return report;
  }

  const CorrectionMethod method = parse_correction_method(options.method);
  std::optional<CorrectionTerm> term;
  if (method != CorrectionMethod::NACP || options.with_delta) {
    term = compute_term(method, n, noise, k, options.delta, options.priors, class_counts(calib.labels, k),
                        options.mc_samples, options.seed, global.threads);
    report["delta"] = term->delta_value;
    report["correction"] = term_to_json(*term);
  }
  const AdjustedLevel adjusted = apply_correction(spec, term ? term->delta_value : 0.0);
  report["target_level"] = adjusted.level;
  if (adjusted.trivial_set) {
    report["trivial_set"] = true;
    report["threshold_method"] = nullptr;
    for (const char* key : {"q", "q1", "q2", "achieved_fc", "breakpoint_mode"}) report[key] = nullptr;
    report["breakpoint_count"] = 0;
    report["extended_search"] = false;
    return report;
  }

  ThresholdResult r;
  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    r = nacp_uniform(table, calib.labels, u->epsilon, adjusted.level, options.search);
  } else {
    const InvertedNoise inverse = invert_noise_matrix(std::get<GeneralNoise>(noise).p);
    report["condition_estimate"] = inverse.condition_estimate;
    r = nacp_general(table, calib.labels, inverse, adjusted.level, options.search);
  }
  report["threshold_method"] = threshold_method_name(r.method);
  report["q"] = r.q;
  report["q1"] = r.q1;
  report["q2"] = r.q2;
  report["achieved_fc"] = r.achieved_fc;
  report["breakpoint_count"] = r.breakpoint_count;
  report["breakpoint_mode"] = breakpoint_mode_name(r.breakpoint_mode);
  report["extended_search"] = r.extended_search;
  return report;
}

int cmd_calibrate(const CalibrateOptions& options, const GlobalOptions& global, std::ostream& out) {
  const json report = calibrate_report(options, global);
  save_json(options.out, report);
  global.format == OutputFormat::Json ? write_json(out, report) : write_text(out, report);
  return report.at("trivial_set").get<bool>() ? kTrivialSet : kOk;
}

int cmd_predict(const PredictOptions& options, const GlobalOptions&, std::ostream& out) {
  if (options.threshold.has_value() == !options.report.empty()) {
    throw Error(Errc::InvalidArgument, "give exactly one of --threshold or --report");
  }
  ScoreParams params = options.score;
  double q = 0.0;
  bool all_classes = false;
  if (options.threshold) {
    q = *options.threshold;
    if (!std::isfinite(q)) throw Error(Errc::InvalidArgument, "threshold must be finite");
  } else {
    std::ifstream f(options.report);
    if (!f) throw Error(Errc::Io, "cannot open '" + options.report.string() + "' for reading");
    json report;
    try {
      report = json::parse(f);
      all_classes = report.value("trivial_set", false);
      if (!all_classes) q = report.at("q").get<double>();
      if (!options.score_given && report.contains("score")) params = score_from_json(report.at("score"));
    } catch (const json::exception& e) {
      throw Error(Errc::Format, options.report.string() + ": " + e.what());
    }
  }
  params.validate();
  const ProbabilityMatrix probs = read_probabilities(options.probs);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!options.out.empty()) {
    file.open(options.out);
    if (!file) throw Error(Errc::Io, "cannot open '" + options.out.string() + "' for writing");
    sink = &file;
  }
  std::string line;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    line.clear();
    if (all_classes) {
      for (std::size_t j = 0; j < probs.classes(); ++j) {
        if (j) line += ',';
        line += std::to_string(j);
      }
    } else {
      const std::vector<int> set = prediction_set(probs.row(i), q, params, i);
      for (std::size_t j = 0; j < set.size(); ++j) {
        if (j) line += ',';
        line += std::to_string(set[j]);
      }
    }
    line += '\n';
    *sink << line;
  }
  if (!*sink) throw Error(Errc::Io, "write failed");
  return kOk;
}

json report_to_json(const TrialReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    methods.push_back({{"method", eval_method_name(m.method)},
                       {"completed", m.completed},
                       {"failures", m.failures},
                       {"mean_coverage", m.mean_coverage},
                       {"std_coverage", m.std_coverage},
                       {"mean_size", m.mean_size},
                       {"std_size", m.std_size},
                       {"mean_noisy_coverage", m.mean_noisy_coverage},
                       {"mean_q", m.mean_q},
                       {"mean_delta", m.mean_delta},
                       {"trivial_rate", m.trivial_rate}});
  }
  return {{"n_splits", report.n_splits},
          {"n_calibration", report.n_calibration},
          {"n_test", report.n_test},
          {"k", report.k},
          {"alpha", report.alpha},
          {"methods", methods},
          {"order_checks", report.order_checks},
          {"order_violations", report.order_violations},
          {"delta_checks", report.delta_checks},
          {"delta_violations", report.delta_violations}};
}

int cmd_evaluate(const EvaluateOptions& options, const GlobalOptions& global, std::ostream& out) {
  ExperimentConfig config = options.experiment;
  config.noise = options.noise.resolve();
  config.threads = global.threads;
  config.keep_split_records = !options.splits_csv.empty();

  const bool from_files = !options.probs.empty();
  const NoisyPool pool = [&] {
    if (from_files) {
      if (options.labels_clean.empty() || options.labels_noisy.empty()) {
        throw Error(Errc::InvalidArgument, "--probs needs --labels-clean and --labels-noisy");
      }
      return NoisyPool::validate(read_probabilities(options.probs), read_labels(options.labels_clean),
                                 read_labels(options.labels_noisy));
    }
    SynthConfig synth;
    synth.k = options.k;
    synth.n = options.n;
    synth.class_prior = config.class_prior;
    synth.signal_mu = options.signal_mu;
    synth.logit_sigma = options.logit_sigma;
    synth.seed = config.seed;
    LabeledSet data = generate(synth, global.threads);
    std::vector<int> noisy = inject_noise(data.labels, synth.k, config.noise, config.seed);
    return NoisyPool::validate(std::move(data.probs), std::move(data.labels), std::move(noisy));
  }();
  check_matrix_size(config.noise, pool.probs.classes());

  const TrialReport report = run_experiment(pool, config);
  if (!options.splits_csv.empty()) {
    std::ofstream f(options.splits_csv);
    if (!f) throw Error(Errc::Io, "cannot open '" + options.splits_csv.string() + "' for writing");
    write_split_csv(f, report);
  }
  json j = report_to_json(report);
  j["seed"] = config.seed;
  j["score"] = score_to_json(config.score);
  j["epsilon"] = number_or_null(epsilon_or_nan(config.noise));
  j["delta_conf"] = config.delta_conf;
  j["source"] = from_files ? "files" : "synthetic";
  save_json(options.out, j);
  if (global.format == OutputFormat::Json) {
    write_json(out, j);
  } else {
    write_report_table(out, report);
  }
  return kOk;
}

int cmd_guarantee(const GuaranteeOptions& options, const GlobalOptions& global, std::ostream& out) {
  if (options.n.empty()) throw Error(Errc::InvalidArgument, "--n is required");
  if (options.k < 2) throw Error(Errc::TooFewClasses, "k must be >= 2");
  const CoverageSpec spec = CoverageSpec::validate(options.alpha, options.delta);
  const NoiseModel noise = options.noise.resolve();
  check_matrix_size(noise, options.k);

  json rows = json::array();
  for (std::size_t n : options.n) {
    for (const auto& name : options.methods) {
      const CorrectionMethod method = parse_correction_method(name);
      CorrectionTerm term = compute_term(method, n, noise, options.k, options.delta, options.priors,
                                         std::nullopt, options.mc_samples, options.seed, global.threads);
      term.k = options.k;
      const AdjustedLevel level = apply_correction(spec, term);
      json row = term_to_json(term);
      row["level"] = level.level;
      row["trivial_set"] = level.trivial_set;
      rows.push_back(row);
    }
  }

  if (global.format == OutputFormat::Json) {
    write_json(out, rows);
    return kOk;
  }
  out << "method,n,k,epsilon,delta,level,trivial_set\n";
  for (const auto& row : rows) {
    out << row["method"].get<std::string>() << ',' << row["n"].get<std::size_t>() << ','
        << row["k"].get<std::size_t>() << ','
        << (row["epsilon"].is_null() ? std::string() : format_double(row["epsilon"].get<double>())) << ','
        << format_double(row["delta"].get<double>()) << ',' << format_double(row["level"].get<double>())
        << ',' << (row["trivial_set"].get<bool>() ? 1 : 0) << '\n';
  }
  return kOk;
}

}  // namespace noisycp::cli
