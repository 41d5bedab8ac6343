#include "ssca/baselines.hpp"

#include <algorithm>
#include <string>

#include "ssca/errors.hpp"
#include "ssca/surrogate.hpp"
#include "ssca/solvers.hpp"

namespace ssca {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void heavy_ball(Vector& w, Vector& v, const Vector& g, double r, double beta) {
  v = beta * v + g;
  w -= r * v;
}

Vector local_sgd(SampleClient& c, const NnShape& shape, Vector w, unsigned t, std::size_t B, double lambda,
                 const SgdConfig& cfg) {
  if (c.momentum().size() != w.size()) c.momentum() = Vector::Zero(w.size());
  const IndexSet pool = sample_minibatch(c.rng(), c.size(), B * cfg.local_steps);
  const double r = cfg.lr.value(t);
  for (unsigned e = 0; e < cfg.local_steps; ++e) {
    const IndexSet rows(pool.begin() + static_cast<long>(e * B), pool.begin() + static_cast<long>((e + 1) * B));
    SampleStats s = batch_sum(NnParams::from_flat(shape, w), c.features(), c.labels(), rows);
    const Vector g = s.flat_grad() / static_cast<double>(B) + 2.0 * lambda * w;
    heavy_ball(w, c.momentum(), g, r, cfg.momentum);
  }
  if (!all_finite(w)) throw NumericError("local SGD diverged at round " + std::to_string(t));
  return w;
}

}  // namespace

void validate_sgd_config(const SgdConfig& cfg, std::size_t batch, const std::vector<std::size_t>& block_sizes) {
  if (cfg.local_steps == 0) throw ConfigError("baseline.E must be at least 1");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("baseline.momentum must lie in [0, 1)");
  if (!(cfg.lr.coefficient > 0.0 && cfg.lr.coefficient <= 1.0)) {
    throw ConfigError("baseline learning rate must lie in (0, 1]");
  }
  for (std::size_t n : block_sizes) {
    if (batch * cfg.local_steps > n) {
      throw ConfigError("batch x E = " + std::to_string(batch * cfg.local_steps) + " exceeds a block of " +
                        std::to_string(n) + " samples");
    }
  }
}

RoundMetrics sgd_sample_round(Server& server, std::vector<SampleClient>& clients, Transport& net, unsigned t,
                              const SgdConfig& cfg) {
  if (clients.empty()) throw InvalidArgument("sgd_sample_round: no clients");
  const NnShape shape = server.model().shape();
  const std::size_t B = server.config().batch;
  const double lambda = server.config().lambda;
  const auto d = static_cast<std::uint32_t>(shape.dim());
  const std::size_t bytes0 = net.bytes_sent();
  const std::size_t frames0 = net.frames_sent();
  RoundMetrics metrics;
  metrics.samples = B * cfg.local_steps;

  std::size_t N = 0;
  for (const auto& c : clients) N += c.size();

  Vector avg = Vector::Zero(d);
  try {
    const std::vector<double> flat = to_std(server.model().flat());
    for (const auto& c : clients) {
      net.send(c.id(), make_real_message(MessageKind::ModelBroadcast, t, kServerId, {d}, flat));
    }
    for (auto& c : clients) {
      const RoundMessage bc = expect(net, c.id(), MessageKind::ModelBroadcast, t, kServerId);
      if (bc.element_count() != d) throw RoundAbort("model broadcast has the wrong dimension", t);
      const Vector local = local_sgd(c, shape, from_std(bc.reals), t, B, lambda, cfg);
      net.send(kServerId, make_real_message(MessageKind::ModelBroadcast, t, c.id(), {d}, to_std(local)));
    }
    for (const auto& c : clients) {
      const RoundMessage up = expect(net, kServerId, MessageKind::ModelBroadcast, t, c.id());
      if (up.element_count() != d) throw RoundAbort("client model upload has the wrong dimension", t);
      metrics.upload_reals.push_back(up.element_count());
      avg += (static_cast<double>(c.size()) / static_cast<double>(N)) * from_std(up.reals);
    }
  } catch (const RoundAbort&) {
    net.clear();
    throw;
  }
  server.set_model(NnParams::from_flat(shape, avg));
  metrics.bytes = net.bytes_sent() - bytes0;
  metrics.frames = net.frames_sent() - frames0;
  return metrics;
}

RoundMetrics sgd_feature_round(Server& server, std::vector<FeatureClient>& clients, Transport& net, unsigned t,
                               const SgdConfig& cfg) {
  const std::size_t bytes0 = net.bytes_sent();
  const std::size_t frames0 = net.frames_sent();
  RoundMetrics metrics;
  metrics.samples = server.config().batch;
  const SampleStats sums = gather_feature_sums(server, clients, net, t, false, metrics);

  Vector w = server.model().flat();
  const Vector g =
      sums.flat_grad() / static_cast<double>(server.config().batch) + 2.0 * server.config().lambda * w;
  heavy_ball(w, server.momentum(), g, cfg.lr.value(t), cfg.momentum);
  if (!all_finite(w)) throw NumericError("feature SGD diverged at round " + std::to_string(t));
  server.set_model(NnParams::from_flat(server.model().shape(), w));
  metrics.bytes = net.bytes_sent() - bytes0;
  metrics.frames = net.frames_sent() - frames0;
  return metrics;
}

EquivalenceReport ssca_momentum_equivalence(unsigned T, const Vector& w1, double tau, const StepsizeSchedule& rho,
                                            const StepsizeSchedule& gamma, const GradientStream& grad,
                                            bool force_first_rho_one) {
  if (!(tau > 0.0)) throw InvalidArgument("ssca_momentum_equivalence: tau must be positive");
  EquivalenceReport rep;
  SurrogateBank bank(static_cast<std::size_t>(w1.size()), 0, tau);
  Vector wa = w1;
  Vector wb = w1;
  Vector v = Vector::Zero(w1.size());
  double gamma_prev = 0.0;
  rep.ssca_path.push_back(wa);
  rep.momentum_path.push_back(wb);

  for (unsigned t = 1; t <= T; ++t) {
    const double r = (t == 1 && force_first_rho_one) ? 1.0 : rho.value(t);
    const double g_t = gamma.value(t);

    bank.accumulate_objective(r, wa, grad(t, wa));
    bank.advance_round();
    const Vector target = solve_unconstrained(bank.objective());
    wa = (1.0 - g_t) * wa + g_t * target;

    v = (1.0 - r) * (1.0 - gamma_prev) * v + (r / (2.0 * tau)) * grad(t, wb);
    wb -= g_t * v;
    gamma_prev = g_t;

    rep.ssca_path.push_back(wa);
    rep.momentum_path.push_back(wb);
    rep.max_deviation = std::max(rep.max_deviation, (wa - wb).cwiseAbs().maxCoeff());
  }
  return rep;
}

double ssca_momentum_equivalence_app(const NnParams& init, const RowMatrix& features, const RowMatrix& labels,
                                     std::size_t batch, unsigned T, double tau, double lambda,
                                     const StepsizeSchedule& rho, const StepsizeSchedule& gamma,
                                     std::uint64_t seed) {
  const NnShape shape = init.shape();
  SeededRng rng(seed, kBatchStreamBase);
  std::vector<IndexSet> batches;
  for (unsigned t = 0; t < T; ++t) {
    batches.push_back(sample_minibatch(rng, static_cast<std::size_t>(features.rows()), batch));
  }
  const auto avg_stats = [&](const NnParams& w, unsigned t) {
    SampleStats s = batch_sum(w, features, labels, batches[t - 1]);
    s *= 1.0 / static_cast<double>(batch);
    return s;
  };

  AppSurrogateState state = AppSurrogateState::zeros(shape);
  NnParams wa = init;
  Vector wb = init.flat();
  Vector v = Vector::Zero(wb.size());
  double gamma_prev = 0.0;
  double dev = 0.0;
  for (unsigned t = 1; t <= T; ++t) {
    const double r = t == 1 ? 1.0 : rho.value(t);
    const double g_t = gamma.value(t);

    state = update_app_surrogate(state, r, tau, wa, avg_stats(wa, t));
    const NnParams target = solve_unconstrained_app(state, lambda, tau);
    wa.omega0 = (1.0 - g_t) * wa.omega0 + g_t * target.omega0;
    wa.omega1 = (1.0 - g_t) * wa.omega1 + g_t * target.omega1;

    const NnParams wb_params = NnParams::from_flat(shape, wb);
    const Vector g = avg_stats(wb_params, t).flat_grad() + 2.0 * lambda * wb;
    v = (1.0 - r) * (1.0 - gamma_prev) * v + (r / (2.0 * tau)) * g;
    wb -= g_t * v;
    gamma_prev = g_t;

    dev = std::max(dev, (wa.flat() - wb).cwiseAbs().maxCoeff());
  }
  return dev;
}

}  // namespace ssca
