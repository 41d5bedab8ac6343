#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssca/model.hpp"
#include "ssca/protocol/roles.hpp"
#include "ssca/schedules.hpp"

namespace ssca {

/// Learning rate r_t, E local steps per round (sample-based only) and a
/// heavy-ball coefficient: v <- beta v + g, w <- w - r v.
struct SgdConfig {
  StepsizeSchedule lr = StepsizeSchedule::power(0.3, 0.3);
  unsigned local_steps = 1;
  double momentum = 0.0;
};

void validate_sgd_config(const SgdConfig& cfg, std::size_t batch, const std::vector<std::size_t>& block_sizes);

/// Every client starts from the broadcast model, runs E steps on fresh batches
/// of B (drawn without replacement within the round) and uploads its model;
/// the server averages with weights N_i / N. The gradient includes 2 lambda w.
RoundMetrics sgd_sample_round(Server& server, std::vector<SampleClient>& clients, Transport& net,
                              unsigned t, const SgdConfig& cfg);

/// One global step with the batch gradient assembled through the feature
/// exchange; the server holds the momentum buffer.
RoundMetrics sgd_feature_round(Server& server, std::vector<FeatureClient>& clients, Transport& net,
                               unsigned t, const SgdConfig& cfg);

/// g_t evaluated at the current iterate of whichever recursion asks.
using GradientStream = std::function<Vector(unsigned t, const Vector& w)>;

struct EquivalenceReport {
  double max_deviation = 0.0;
  std::vector<Vector> ssca_path;      // w_1 .. w_{T+1}
  std::vector<Vector> momentum_path;  // w_1 .. w_{T+1}
};

/// Runs the quadratic-surrogate SSCA recursion and the momentum form
///   v_t = (1 - rho_t)(1 - gamma_{t-1}) v_{t-1} + rho_t g_t / (2 tau),  w_{t+1} = w_t - gamma_t v_t
/// from v_0 = 0, gamma_0 = 0 and reports max_t ||w_t^a - w_t^b||_inf.
/// The two agree exactly only when the first surrogate forgets its zero
/// prior, so rho_1 is taken as 1 unless `force_first_rho_one` is false.
EquivalenceReport ssca_momentum_equivalence(unsigned T, const Vector& w1, double tau,
                                            const StepsizeSchedule& rho, const StepsizeSchedule& gamma,
                                            const GradientStream& grad, bool force_first_rho_one = true);

/// Same comparison on the application model: path (a) uses the
/// (beta, A, B, C) recursion and its closed form, path (b) the momentum form
/// with g_t = batch-average gradient + 2 lambda w_t. Both consume identical batches.
double ssca_momentum_equivalence_app(const NnParams& init, const RowMatrix& features, const RowMatrix& labels,
                                     std::size_t batch, unsigned T, double tau, double lambda,
                                     const StepsizeSchedule& rho, const StepsizeSchedule& gamma,
                                     std::uint64_t seed);

}  // namespace ssca
