#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssca/baselines.hpp"
#include "ssca/data.hpp"
#include "ssca/protocol/roles.hpp"
#include "ssca/protocol/transport.hpp"

namespace ssca {

std::string toolkit_version();

struct DataSource {
  enum class Kind { Synthetic, Idx };
  Kind kind = Kind::Synthetic;
  std::size_t n = 2000;
  std::size_t p = 20;
  std::size_t l = 4;
  double separation = 5.0;
  std::uint64_t seed = 7;
  std::string images;
  std::string labels;
  std::string test_images;  // optional; accuracy falls back to the training set
  std::string test_labels;
};

struct RunConfig {
  RoundConfig round;
  SgdConfig sgd;
  std::size_t clients = 4;
  std::vector<std::size_t> client_sizes;  // empty: balanced blocks
  std::size_t hidden = 16;
  unsigned repetitions = 1;
  std::uint64_t seed = 1;
  DataSource data;
  double init_scale = 0.05;
  unsigned penalty_stages = 1;
  double penalty_growth = 10.0;
  bool schedule_strict = false;
  bool timing = false;
  std::string preset;
  std::string output;  // destination only, never echoed
};

/// Flat `key = value` lines, `#` comments. A `preset` key is applied before
/// every other key regardless of position. Unknown or repeated keys and
/// malformed values raise ConfigError naming the line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical listing of every effective setting, one `key = value` per line.
std::string render_config(const RunConfig& cfg);

std::vector<std::string> preset_names();
/// Config text for a bundled experiment preset; ConfigError if unknown.
std::string preset_text(std::string_view name);

/// Parses "N,P,L,sep,seed".
DataSource parse_synthetic_spec(std::string_view spec);

DatasetSplit load_data(const DataSource& source);

/// Full validation against the loaded data; throws ConfigError. Returns
/// schedule warnings (or throws when schedule.strict is set).
std::vector<std::string> check_config(const RunConfig& cfg, const DatasetSplit& data);

struct RoundRecord {
  unsigned round = 0;
  double training_cost = 0.0;
  double test_accuracy = 0.0;
  double l2_norm = 0.0;
  double constraint_value = 0.0;
  double slack = 0.0;
  std::size_t samples = 0;
  double elapsed_ms = 0.0;
};

struct RepetitionResult {
  std::vector<RoundRecord> rows;
  NnParams final_model;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<RepetitionResult> reps;
  std::vector<RoundRecord> mean;
};

/// One repetition with master seed cfg.seed + rep. Row t reports the model
/// w_t entering round t and the slack of round t's subproblem.
RepetitionResult run_repetition(const RunConfig& cfg, const DatasetSplit& data, unsigned rep,
                                TransportKind transport = TransportKind::InProcess);

/// Repetitions may run on `jobs` threads; results are ordered by repetition.
ExperimentResult run_experiment(const RunConfig& cfg, const DatasetSplit& data,
                                TransportKind transport = TransportKind::InProcess, unsigned jobs = 1);

std::string render_csv(const ExperimentResult& result);

enum class SweepKind { Lambda, Ubound };

struct SweepPoint {
  double value = 0.0;
  double final_cost = 0.0;
  double final_l2 = 0.0;
};

std::vector<SweepPoint> run_tradeoff_sweep(const RunConfig& base, const DatasetSplit& data, SweepKind kind,
                                           const std::vector<double>& values,
                                           TransportKind transport = TransportKind::InProcess,
                                           unsigned jobs = 1);

std::string render_sweep_csv(const RunConfig& base, SweepKind kind, const std::vector<SweepPoint>& points);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace ssca
