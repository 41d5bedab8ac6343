#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssca/model.hpp"
#include "ssca/numerics.hpp"
#include "ssca/protocol/transport.hpp"
#include "ssca/schedules.hpp"

namespace ssca {

enum class Algorithm {
  SscaSampleUncon,
  SscaSampleCon,
  SscaFeatureUncon,
  SscaFeatureCon,
  SgdSample,
  SgdmSample,
  SgdFeature,
  SgdmFeature,
};

enum class Partition { Sample, Feature };
enum class SolverKind { ClosedForm, Barrier };

const char* algorithm_name(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name);
Partition partition_of(Algorithm a) noexcept;
bool is_ssca(Algorithm a) noexcept;
bool is_constrained(Algorithm a) noexcept;
bool uses_momentum(Algorithm a) noexcept;

struct RoundConfig {
  Algorithm algorithm = Algorithm::SscaSampleUncon;
  std::size_t batch = 10;
  unsigned rounds = 1000;
  double tau = 0.2;
  double lambda = 1e-5;
  double ubound = 0.13;
  double penalty = 1e5;
  StepsizeSchedule rho = StepsizeSchedule::power(0.9, 0.1);
  StepsizeSchedule gamma = StepsizeSchedule::power(0.5, 0.1);
  SolverKind solver = SolverKind::ClosedForm;
  double barrier_tol = 1e-9;
};

/// Throws ConfigError when the batch does not fit the partition or a scalar
/// is out of range. `block_sizes` are N_i (sample-based) or the single N.
void validate_round_config(const RoundConfig& cfg, const std::vector<std::size_t>& block_sizes);

/// Per-round accounting. Real counts are per message.
struct RoundMetrics {
  double slack = 0.0;
  double nu = 0.0;
  std::size_t samples = 0;  // samples touched per client
  std::size_t bytes = 0;
  std::size_t frames = 0;
  std::vector<std::size_t> upload_reals;  // QObjective / model upload, by client id
  std::size_t aggregate_reals = 0;        // QAggregate
  std::size_t exchange_reals = 0;         // one HExchange message
};

class Server {
 public:
  Server(NnParams init, RoundConfig cfg, std::uint64_t seed);

  const NnParams& model() const noexcept { return omega_; }
  void set_model(NnParams omega);
  const AppSurrogateState& surrogate() const noexcept { return state_; }
  void reset_surrogate();
  const RoundConfig& config() const noexcept { return cfg_; }
  double penalty() const noexcept { return penalty_; }
  void set_penalty(double c);

  /// Draws the feature-based batch N^(t).
  SeededRng& batch_rng() noexcept { return rng_; }
  /// Heavy-ball buffer for server-side baselines.
  Vector& momentum() noexcept { return momentum_; }

  struct StepResult {
    double slack = 0.0;
    double nu = 0.0;
  };

  /// Surrogate update with the weighted batch averages at the current model,
  /// subproblem solve, then w <- (1 - gamma) w + gamma w_bar.
  StepResult ssca_step(unsigned t, const SampleStats& batch_avg, bool constrained);

 private:
  RoundConfig cfg_;
  NnParams omega_;
  AppSurrogateState state_;
  double penalty_;
  SeededRng rng_;
  Vector momentum_;
};

/// RNG stream ids: sample client i uses kBatchStreamBase + i, the
/// feature-based server kBatchStreamBase.
inline constexpr std::uint64_t kBatchStreamBase = 0x1000;

class SampleClient {
 public:
  SampleClient(std::uint16_t id, RowMatrix features, RowMatrix labels, std::uint64_t seed);

  std::uint16_t id() const noexcept { return id_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  const RowMatrix& features() const noexcept { return features_; }
  const RowMatrix& labels() const noexcept { return labels_; }
  SeededRng& rng() noexcept { return rng_; }
  Vector& momentum() noexcept { return momentum_; }

  /// Takes the round's ModelBroadcast, draws B local samples and replies with
  /// QObjective (sums of a_bar, b_bar) and, if constrained, QConstraint (sum of c_bar).
  void ssca_reply(Transport& net, unsigned t, std::size_t batch, const NnShape& shape,
                  bool constrained);

 private:
  std::uint16_t id_;
  RowMatrix features_;
  RowMatrix labels_;
  SeededRng rng_;
  Vector momentum_;
};

class FeatureClient {
 public:
  /// `features` holds this client's columns (all N rows); every client holds all labels.
  FeatureClient(std::uint16_t id, IndexSet feature_ids, RowMatrix features, RowMatrix labels,
                std::size_t hidden);

  std::uint16_t id() const noexcept { return id_; }
  const IndexSet& feature_ids() const noexcept { return feature_ids_; }
  std::size_t feature_count() const noexcept { return feature_ids_.size(); }
  std::size_t sample_count() const noexcept { return static_cast<std::size_t>(labels_.rows()); }

  /// Takes BatchAnnounce and ModelBroadcast (omega0 then this client's omega1
  /// columns), sends partial pre-activations (B x J) to every peer.
  void exchange(Transport& net, unsigned t, std::size_t clients);

  /// Sums the partial pre-activations in client-id order and replies:
  /// the aggregator sends QAggregate (sum of a_bar, plus sum of c_bar if
  /// `with_constraint`), every client sends QObjective (its b_bar columns).
  void reply(Transport& net, unsigned t, std::size_t clients, bool aggregator, bool with_constraint);

 private:
  std::uint16_t id_;
  IndexSet feature_ids_;
  RowMatrix features_;
  RowMatrix labels_;
  std::size_t hidden_;
  IndexSet batch_;
  RowMatrix omega0_;
  RowMatrix omega1_;
  RowMatrix h_;
};

inline constexpr std::uint16_t kAggregatorId = 0;

RoundMetrics run_round_sample(Server& server, std::vector<SampleClient>& clients, Transport& net,
                              unsigned t, bool constrained);

RoundMetrics run_round_feature(Server& server, std::vector<FeatureClient>& clients, Transport& net,
                               unsigned t, bool constrained);

/// Steps (a)-(d) of a feature-based round: returns the batch sums of the
/// sample statistics assembled from the clients' replies.
SampleStats gather_feature_sums(Server& server, std::vector<FeatureClient>& clients, Transport& net,
                                unsigned t, bool with_constraint, RoundMetrics& metrics);

/// Takes a message or aborts the round.
RoundMessage expect(Transport& net, std::uint16_t node, MessageKind kind, unsigned t,
                    std::uint16_t sender);

}  // namespace ssca
