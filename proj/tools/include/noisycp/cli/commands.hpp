#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisycp/calibrate.hpp"
#include "noisycp/guarantees.hpp"
#include "noisycp/harness.hpp"
#include "noisycp/scores.hpp"
#include "noisycp/types.hpp"

namespace noisycp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kTrivialSet = 3 };

enum class OutputFormat { Json, Text };

/// Exactly one of epsilon / matrix_path.
struct NoiseArgs {
  std::optional<double> epsilon;
  std::filesystem::path matrix_path;

  NoiseModel resolve() const;
};

struct GlobalOptions {
  std::size_t threads = 1;
  OutputFormat format = OutputFormat::Json;
};

struct SimulateOptions {
  std::size_t k = 10;
  std::size_t n = 1000;
  NoiseArgs noise;
  std::vector<double> priors;
  double signal_mu = 2.0;
  double logit_sigma = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
};

struct CalibrateOptions {
  std::filesystem::path probs;
  std::filesystem::path labels;
  NoiseArgs noise;
  double alpha = 0.1;
  double delta = 0.001;
  ScoreParams score;
  /// standard, nacp, acnl or crcp.
  std::string method = "nacp";
  /// Adds the NACP correction; acnl and crcp always apply theirs.
  bool with_delta = false;
  SearchOptions search;
  std::vector<double> priors;
  std::size_t mc_samples = 100'000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct PredictOptions {
  std::filesystem::path probs;
  std::optional<double> threshold;
  std::filesystem::path report;
  ScoreParams score;
  bool score_given = false;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path probs;
  std::filesystem::path labels_clean;
  std::filesystem::path labels_noisy;
  /// Synthetic pool, used when no files are given.
  std::size_t k = 100;
  std::size_t n = 20000;
  double signal_mu = 3.0;
  double logit_sigma = 1.0;
  NoiseArgs noise;
  ExperimentConfig experiment;
  std::filesystem::path out;
  std::filesystem::path splits_csv;
};

struct GuaranteeOptions {
  std::vector<std::size_t> n;
  std::size_t k = 10;
  NoiseArgs noise;
  double delta = 0.001;
  double alpha = 0.1;
  std::vector<std::string> methods = {"nacp", "acnl", "crcp"};
  std::vector<double> priors;
  std::size_t mc_samples = 100'000;
  std::uint64_t seed = 0;
};

/// Calibrate report as written by cmd_calibrate and read back by cmd_predict.
nlohmann::json calibrate_report(const CalibrateOptions& options, const GlobalOptions& global);

int cmd_simulate(const SimulateOptions& options, const GlobalOptions& global, std::ostream& out);
int cmd_calibrate(const CalibrateOptions& options, const GlobalOptions& global, std::ostream& out);
int cmd_predict(const PredictOptions& options, const GlobalOptions& global, std::ostream& out);
int cmd_evaluate(const EvaluateOptions& options, const GlobalOptions& global, std::ostream& out);
int cmd_guarantee(const GuaranteeOptions& options, const GlobalOptions& global, std::ostream& out);

nlohmann::json report_to_json(const TrialReport& report);

}  // namespace noisycp::cli
