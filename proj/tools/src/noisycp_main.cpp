#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>

#include "noisycp/cli/commands.hpp"
#include "noisycp/error.hpp"
#include "noisycp/parallel.hpp"

using namespace noisycp;
using namespace noisycp::cli;

namespace {

void add_noise(CLI::App* cmd, NoiseArgs& noise) {
  auto* eps = cmd->add_option("--epsilon", noise.epsilon, "Uniform noise level in [0,1)");
  auto* mat = cmd->add_option("--noise-matrix", noise.matrix_path, "k x k transition matrix CSV")
                  ->check(CLI::ExistingFile);
  eps->excludes(mat);
}

void add_score(CLI::App* cmd, ScoreParams& score, bool* given = nullptr) {
  static const std::map<std::string, ScoreKind> kinds = {
      {"hps", ScoreKind::HPS}, {"aps", ScoreKind::APS}, {"raps", ScoreKind::RAPS}};
  auto* opt = cmd->add_option("--score", score.kind, "Conformity score")
                  ->transform(CLI::CheckedTransformer(kinds, CLI::ignore_case));
  cmd->add_option("--raps-a", score.raps_a, "RAPS penalty weight");
  cmd->add_option("--raps-b", score.raps_b, "RAPS free set size");
  cmd->add_flag("--randomized", score.randomized, "Randomized APS");
  cmd->add_option("--score-seed", score.seed, "Seed of the randomized score draws");
  if (given) {
    cmd->callback([opt, given] { *given = opt->count() > 0; });
  }
}

void add_search(CLI::App* cmd, SearchOptions& search) {
  cmd->add_flag("--largest-solution", search.largest_solution,
                "Pick the largest threshold at which fc stays above the level");
  cmd->add_option("--grid-budget", search.curve.grid_budget,
                  "Use a grid when n*k exceeds this many class scores");
  cmd->add_option("--grid-resolution", search.curve.grid_resolution, "Grid points");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction with noisy calibration labels"};
  app.require_subcommand(1);

  GlobalOptions global;
  global.threads = default_thread_count();
  static const std::map<std::string, OutputFormat> formats = {{"json", OutputFormat::Json},
                                                               {"text", OutputFormat::Text}};
  app.add_option("--threads", global.threads, "Worker threads (default: NOISYCP_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", global.format, "Output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic probabilities and noisy labels");
  simulate->add_option("--k", sim.k, "Classes")->required();
  simulate->add_option("--n", sim.n, "Samples")->required();
  add_noise(simulate, sim.noise);
  simulate->add_option("--priors", sim.priors, "Clean class prior")->delimiter(',');
  simulate->add_option("--signal-mu", sim.signal_mu, "Logit boost of the true class");
  simulate->add_option("--logit-sigma", sim.logit_sigma, "Logit noise scale");
  simulate->add_option("--seed", sim.seed, "Seed");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Compute a threshold from noisy labels");
  calibrate->add_option("--probs", cal.probs, "Probability CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--labels", cal.labels, "Noisy label CSV")->required()->check(CLI::ExistingFile);
  add_noise(calibrate, cal.noise);
  calibrate->add_option("--alpha", cal.alpha, "Miscoverage level");
  calibrate->add_option("--delta", cal.delta, "Confidence parameter of the correction");
  add_score(calibrate, cal.score);
  calibrate->add_option("--method", cal.method, "standard, nacp, acnl or crcp")
      ->check(CLI::IsMember({"standard", "nacp", "acnl", "crcp"}, CLI::ignore_case));
  calibrate->add_flag("--with-delta", cal.with_delta, "Apply the finite-sample correction to nacp");
  add_search(calibrate, cal.search);
  calibrate->add_option("--priors", cal.priors, "Clean class prior")->delimiter(',');
  calibrate->add_option("--mc-samples", cal.mc_samples, "Monte Carlo replications for c(n)");
  calibrate->add_option("--seed", cal.seed, "Monte Carlo seed");
  calibrate->add_option("--out", cal.out, "Write the JSON report here");

  PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Write prediction sets, one line per sample");
  predict->add_option("--probs", pred.probs, "Probability CSV")->required()->check(CLI::ExistingFile);
  auto* thr = predict->add_option("--threshold", pred.threshold, "Threshold q");
  auto* rep = predict->add_option("--report", pred.report, "Calibrate report JSON")->check(CLI::ExistingFile);
  thr->excludes(rep);
  add_score(predict, pred.score, &pred.score_given);
  predict->add_option("--out", pred.out, "Output file (default stdout)");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Repeated-split evaluation of all methods");
  evaluate->add_option("--probs", ev.probs, "Pooled probability CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--labels-clean", ev.labels_clean, "Clean label CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--labels-noisy", ev.labels_noisy, "Noisy label CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--k", ev.k, "Synthetic classes");
  evaluate->add_option("--n", ev.n, "Synthetic pool size");
  evaluate->add_option("--signal-mu", ev.signal_mu, "Synthetic logit boost");
  evaluate->add_option("--logit-sigma", ev.logit_sigma, "Synthetic logit noise");
  add_noise(evaluate, ev.noise);
  std::vector<std::string> eval_methods;
  evaluate->add_option("--methods", eval_methods, "oracle,noisy_cp,nrcp,nacp,acnl,crcp")->delimiter(',');
  evaluate->add_option("--alpha", ev.experiment.alpha, "Miscoverage level");
  evaluate->add_option("--delta", ev.experiment.delta_conf, "Confidence parameter");
  add_score(evaluate, ev.experiment.score);
  add_search(evaluate, ev.experiment.search);
  evaluate->add_option("--splits", ev.experiment.n_splits, "Random splits");
  evaluate->add_option("--split-fraction", ev.experiment.split_fraction, "Calibration fraction");
  evaluate->add_option("--priors", ev.experiment.class_prior, "Clean class prior")->delimiter(',');
  evaluate->add_option("--mc-samples", ev.experiment.acnl_mc_samples, "Monte Carlo replications for c(n)");
  evaluate->add_option("--seed", ev.experiment.seed, "Seed");
  evaluate->add_option("--out", ev.out, "Write the JSON report here");
  evaluate->add_option("--splits-csv", ev.splits_csv, "Write per-split rows here");

  GuaranteeOptions gu;
  auto* guarantee = app.add_subcommand("guarantee", "Finite-sample correction terms");
  guarantee->add_option("--n", gu.n, "Calibration size(s)")->delimiter(',');
  guarantee->add_option("--sweep-n", gu.n, "Alias of --n for a list of sizes")->delimiter(',');
  guarantee->add_option("--k", gu.k, "Classes");
  add_noise(guarantee, gu.noise);
  guarantee->add_option("--delta", gu.delta, "Confidence parameter");
  guarantee->add_option("--alpha", gu.alpha, "Miscoverage level");
  guarantee->add_option("--methods", gu.methods, "nacp,acnl,crcp")->delimiter(',');
  guarantee->add_option("--priors", gu.priors, "Clean class prior")->delimiter(',');
  guarantee->add_option("--mc-samples", gu.mc_samples, "Monte Carlo replications for c(n)");
  guarantee->add_option("--seed", gu.seed, "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, global, std::cout);
    if (*calibrate) return cmd_calibrate(cal, global, std::cout);
    if (*predict) return cmd_predict(pred, global, std::cout);
    if (*evaluate) {
      if (!eval_methods.empty()) {
        ev.experiment.methods.clear();
        for (const auto& m : eval_methods) ev.experiment.methods.push_back(parse_eval_method(m));
      }
      return cmd_evaluate(ev, global, std::cout);
    }
    if (*guarantee) return cmd_guarantee(gu, global, std::cout);
  } catch (const Error& e) {
    std::cerr << "noisycp: " << e.what() << '\n';
    return is_numerical(e.code()) ? kNumerical : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "noisycp: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
