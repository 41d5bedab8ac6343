#include "ssca/protocol/roles.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <utility>

#include "ssca/data.hpp"
#include "ssca/errors.hpp"

namespace ssca {

namespace {

struct AlgorithmInfo {
  Algorithm algorithm;
  const char* name;
};

constexpr std::array<AlgorithmInfo, 8> kAlgorithms{{
    {Algorithm::SscaSampleUncon, "ssca-sample-uncon"},
    {Algorithm::SscaSampleCon, "ssca-sample-con"},
    {Algorithm::SscaFeatureUncon, "ssca-feature-uncon"},
    {Algorithm::SscaFeatureCon, "ssca-feature-con"},
    {Algorithm::SgdSample, "sgd-sample"},
    {Algorithm::SgdmSample, "sgdm-sample"},
    {Algorithm::SgdFeature, "sgd-feature"},
    {Algorithm::SgdmFeature, "sgdm-feature"},
}};

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename Matrix>
std::vector<double> to_std_matrix(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  Eigen::Map<RowMatrix>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

RowMatrix to_matrix(const double* data, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const RowMatrix>(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_count(const RoundMessage& m, std::size_t expected, unsigned t) {
  if (m.element_count() != expected) {
    throw RoundAbort(std::string(kind_name(m.kind)) + " from node " + std::to_string(m.sender) + ": expected " +
                         std::to_string(expected) + " elements, got " + std::to_string(m.element_count()),
                     t);
  }
}

std::uint16_t node_id(std::size_t i) { return static_cast<std::uint16_t>(i); }

}  // namespace

const char* algorithm_name(Algorithm a) noexcept {
  for (const auto& info : kAlgorithms) {
    if (info.algorithm == a) return info.name;
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& info : kAlgorithms) {
    if (name == info.name) return info.algorithm;
  }
  return std::nullopt;
}

Partition partition_of(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::SscaFeatureUncon:
    case Algorithm::SscaFeatureCon:
    case Algorithm::SgdFeature:
    case Algorithm::SgdmFeature:
      return Partition::Feature;
    default:
      return Partition::Sample;
  }
}

bool is_ssca(Algorithm a) noexcept {
  return a == Algorithm::SscaSampleUncon || a == Algorithm::SscaSampleCon ||
         a == Algorithm::SscaFeatureUncon || a == Algorithm::SscaFeatureCon;
}

bool is_constrained(Algorithm a) noexcept {
  return a == Algorithm::SscaSampleCon || a == Algorithm::SscaFeatureCon;
}

bool uses_momentum(Algorithm a) noexcept {
  return a == Algorithm::SgdmSample || a == Algorithm::SgdmFeature;
}

void validate_round_config(const RoundConfig& cfg, const std::vector<std::size_t>& block_sizes) {
  if (cfg.batch == 0) throw ConfigError("batch must be at least 1");
  if (cfg.rounds == 0) throw ConfigError("rounds must be at least 1");
  if (block_sizes.empty()) throw ConfigError("no data blocks");
  for (std::size_t n : block_sizes) {
    if (cfg.batch > n) {
      throw ConfigError("batch " + std::to_string(cfg.batch) + " exceeds a data block of " + std::to_string(n) +
                        " samples");
    }
  }
  if (!(cfg.tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(cfg.lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(cfg.penalty > 0.0)) throw ConfigError("penalty must be positive");
  if (!std::isfinite(cfg.ubound)) throw ConfigError("ubound must be finite");
  if (!(cfg.barrier_tol > 0.0)) throw ConfigError("barrier.tol must be positive");
  for (const auto* s : {&cfg.rho, &cfg.gamma}) {
    if (!(s->coefficient > 0.0 && s->coefficient <= 1.0)) {
      throw ConfigError("stepsize coefficient must lie in (0, 1], got " + describe(*s));
    }
    if (!(s->exponent >= 0.0)) throw ConfigError("stepsize exponent must be nonnegative");
  }
}

Server::Server(NnParams init, RoundConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      omega_(std::move(init)),
      state_(AppSurrogateState::zeros(omega_.shape())),
      penalty_(cfg_.penalty),
      rng_(seed, kBatchStreamBase),
      momentum_(Vector::Zero(static_cast<Eigen::Index>(omega_.shape().dim()))) {}

void Server::set_model(NnParams omega) {
  if (omega.shape() != omega_.shape()) throw ShapeError("Server::set_model: shape mismatch");
  omega_ = std::move(omega);
}

void Server::reset_surrogate() { state_ = AppSurrogateState::zeros(omega_.shape()); }

void Server::set_penalty(double c) {
  if (!(c > 0.0)) throw InvalidArgument("Server::set_penalty: c must be positive");
  penalty_ = c;
}

Server::StepResult Server::ssca_step(unsigned t, const SampleStats& avg, bool constrained) {
  const double rho = cfg_.rho.value(t);
  const double gamma = cfg_.gamma.value(t);
  AppSurrogateState next = update_app_surrogate(state_, rho, cfg_.tau, omega_, avg);

  StepResult out;
  NnParams target;
  if (constrained) {
    const AppConstrainedSolution sol =
        cfg_.solver == SolverKind::Barrier
            ? solve_constrained_app_barrier(next, cfg_.ubound, cfg_.tau, penalty_, cfg_.barrier_tol)
            : solve_constrained_app(next, cfg_.ubound, cfg_.tau, penalty_);
    target = sol.omega_bar;
    out.slack = sol.slack;
    out.nu = sol.nu;
  } else {
    target = solve_unconstrained_app(next, cfg_.lambda, cfg_.tau);
  }
  state_ = std::move(next);
  omega_.omega0 = (1.0 - gamma) * omega_.omega0 + gamma * target.omega0;
  omega_.omega1 = (1.0 - gamma) * omega_.omega1 + gamma * target.omega1;
  if (!omega_.omega0.allFinite() || !omega_.omega1.allFinite()) {
    throw NumericError("model update produced non-finite parameters at round " + std::to_string(t));
  }
  return out;
}

SampleClient::SampleClient(std::uint16_t id, RowMatrix features, RowMatrix labels, std::uint64_t seed)
    : id_(id),
      features_(std::move(features)),
      labels_(std::move(labels)),
      rng_(seed, kBatchStreamBase + id) {
  if (features_.rows() != labels_.rows()) throw ShapeError("SampleClient: feature/label row mismatch");
}

void SampleClient::ssca_reply(Transport& net, unsigned t, std::size_t batch, const NnShape& shape,
                              bool constrained) {
  const RoundMessage bc = expect(net, id_, MessageKind::ModelBroadcast, t, kServerId);
  require_count(bc, shape.dim(), t);
  const NnParams w = NnParams::from_flat(shape, from_std(bc.reals));
  const IndexSet rows = sample_minibatch(rng_, size(), batch);
  const SampleStats sums = batch_sum(w, features_, labels_, rows);
  const auto d = static_cast<std::uint32_t>(shape.dim());
  net.send(kServerId, make_real_message(MessageKind::QObjective, t, id_, {d}, to_std(sums.flat_grad())));
  if (constrained) {
    net.send(kServerId, make_real_message(MessageKind::QConstraint, t, id_, {1}, {sums.c_bar}));
  }
}

FeatureClient::FeatureClient(std::uint16_t id, IndexSet feature_ids, RowMatrix features, RowMatrix labels,
                             std::size_t hidden)
    : id_(id),
      feature_ids_(std::move(feature_ids)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      hidden_(hidden) {
  if (static_cast<std::size_t>(features_.cols()) != feature_ids_.size()) {
    throw ShapeError("FeatureClient: feature block width does not match its index set");
  }
  if (features_.rows() != labels_.rows()) throw ShapeError("FeatureClient: feature/label row mismatch");
}

void FeatureClient::exchange(Transport& net, unsigned t, std::size_t clients) {
  const RoundMessage ann = expect(net, id_, MessageKind::BatchAnnounce, t, kServerId);
  const RoundMessage bc = expect(net, id_, MessageKind::ModelBroadcast, t, kServerId);
  const std::size_t L = static_cast<std::size_t>(labels_.cols());
  const std::size_t J = hidden_;
  const std::size_t Pi = feature_ids_.size();
  require_count(bc, L * J + J * Pi, t);

  batch_.assign(ann.indices.begin(), ann.indices.end());
  for (std::size_t n : batch_) {
    if (n >= static_cast<std::size_t>(features_.rows())) {
      throw RoundAbort("BatchAnnounce index " + std::to_string(n) + " out of range", t);
    }
  }
  omega0_ = to_matrix(bc.reals.data(), L, J);
  omega1_ = to_matrix(bc.reals.data() + L * J, J, Pi);
  h_ = gather_rows(features_, batch_) * omega1_.transpose();

  const std::vector<double> payload = to_std_matrix(h_);
  for (std::size_t peer = 0; peer < clients; ++peer) {
    if (peer == id_) continue;
    net.send(node_id(peer),
             make_real_message(MessageKind::HExchange, t, id_,
                               {static_cast<std::uint32_t>(batch_.size()), static_cast<std::uint32_t>(J)}, payload));
  }
}

void FeatureClient::reply(Transport& net, unsigned t, std::size_t clients, bool aggregator,
                          bool with_constraint) {
  const std::size_t B = batch_.size();
  const std::size_t J = hidden_;
  RowMatrix pre = RowMatrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(J));
  for (std::size_t k = 0; k < clients; ++k) {
    if (k == id_) {
      pre += h_;
      continue;
    }
    const RoundMessage hm = expect(net, id_, MessageKind::HExchange, t, node_id(k));
    require_count(hm, B * J, t);
    pre += to_matrix(hm.reals.data(), B, J);
  }

  RowMatrix a_sum = RowMatrix::Zero(omega0_.rows(), omega0_.cols());
  RowMatrix b_sum = RowMatrix::Zero(omega1_.rows(), omega1_.cols());
  double c_sum = 0.0;
  for (std::size_t k = 0; k < B; ++k) {
    const auto row = static_cast<Eigen::Index>(batch_[k]);
    const Vector p = pre.row(static_cast<Eigen::Index>(k)).transpose();
    const ResidualTerms terms = residual_terms(omega0_, p, labels_.row(row).transpose());
    if (aggregator) {
      a_sum += terms.residual * terms.activation.transpose();
      c_sum += terms.log_lik;
    }
    b_sum += hidden_delta(omega0_, terms) * features_.row(row);
  }

  if (aggregator) {
    std::vector<double> payload = to_std_matrix(a_sum);
    if (with_constraint) payload.push_back(c_sum);
    const auto n = static_cast<std::uint32_t>(payload.size());
    net.send(kServerId, make_real_message(MessageKind::QAggregate, t, id_, {n}, std::move(payload)));
  }
  net.send(kServerId, make_real_message(MessageKind::QObjective, t, id_,
                                        {static_cast<std::uint32_t>(J), static_cast<std::uint32_t>(feature_count())},
                                        to_std_matrix(b_sum)));
}

RoundMessage expect(Transport& net, std::uint16_t node, MessageKind kind, unsigned t, std::uint16_t sender) {
  auto m = net.take(node, kind, t, sender);
  if (!m) {
    throw RoundAbort(std::string("missing ") + kind_name(kind) + " from node " + std::to_string(sender) +
                         " to node " + std::to_string(node) + " in round " + std::to_string(t),
                     t);
  }
  return std::move(*m);
}

RoundMetrics run_round_sample(Server& server, std::vector<SampleClient>& clients, Transport& net, unsigned t,
                              bool constrained) {
  if (clients.empty()) throw InvalidArgument("run_round_sample: no clients");
  const RoundConfig& cfg = server.config();
  const NnShape shape = server.model().shape();
  const std::size_t bytes0 = net.bytes_sent();
  const std::size_t frames0 = net.frames_sent();
  RoundMetrics metrics;
  metrics.samples = cfg.batch;

  std::size_t N = 0;
  for (const auto& c : clients) N += c.size();

  SampleStats avg = SampleStats::zeros(shape);
  try {
    const auto d = static_cast<std::uint32_t>(shape.dim());
    const std::vector<double> flat = to_std(server.model().flat());
    for (const auto& c : clients) {
      net.send(c.id(), make_real_message(MessageKind::ModelBroadcast, t, kServerId, {d}, flat));
    }
    for (auto& c : clients) c.ssca_reply(net, t, cfg.batch, shape, constrained);

    // Weighted sum with N_i / (B N), reduced in client-id order.
    for (const auto& c : clients) {
      const RoundMessage q = expect(net, kServerId, MessageKind::QObjective, t, c.id());
      require_count(q, shape.dim(), t);
      metrics.upload_reals.push_back(q.element_count());
      SampleStats part;
      const NnParams g = NnParams::from_flat(shape, from_std(q.reals));
      part.a_bar = g.omega0;
      part.b_bar = g.omega1;
      if (constrained) {
        const RoundMessage qc = expect(net, kServerId, MessageKind::QConstraint, t, c.id());
        require_count(qc, 1, t);
        part.c_bar = qc.reals[0];
      }
      part *= static_cast<double>(c.size()) / (static_cast<double>(cfg.batch) * static_cast<double>(N));
      avg += part;
    }
  } catch (const RoundAbort&) {
    net.clear();
    throw;
  }

  const Server::StepResult step = server.ssca_step(t, avg, constrained);
  metrics.slack = step.slack;
  metrics.nu = step.nu;
  metrics.bytes = net.bytes_sent() - bytes0;
  metrics.frames = net.frames_sent() - frames0;
  return metrics;
}

SampleStats gather_feature_sums(Server& server, std::vector<FeatureClient>& clients, Transport& net, unsigned t,
                                bool with_constraint, RoundMetrics& metrics) {
  if (clients.empty()) throw InvalidArgument("gather_feature_sums: no clients");
  const NnShape shape = server.model().shape();
  const std::size_t I = clients.size();
  const std::size_t B = server.config().batch;
  const auto L = static_cast<Eigen::Index>(shape.L);
  const auto J = static_cast<Eigen::Index>(shape.J);

  SampleStats sums = SampleStats::zeros(shape);
  try {
    const IndexSet batch = sample_minibatch(server.batch_rng(), clients.front().sample_count(), B);
    const RowMatrix& w0 = server.model().omega0;
    const RowMatrix& w1 = server.model().omega1;
    for (const auto& c : clients) {
      net.send(c.id(), make_batch_announce(t, kServerId, batch));
      std::vector<double> payload = to_std_matrix(w0);
      const std::vector<double> block = to_std_matrix(gather_columns(w1, c.feature_ids()));
      payload.insert(payload.end(), block.begin(), block.end());
      const auto n = static_cast<std::uint32_t>(payload.size());
      net.send(c.id(), make_real_message(MessageKind::ModelBroadcast, t, kServerId, {n}, std::move(payload)));
    }
    for (auto& c : clients) c.exchange(net, t, I);
    for (auto& c : clients) c.reply(net, t, I, c.id() == kAggregatorId, with_constraint);

    const RoundMessage agg = expect(net, kServerId, MessageKind::QAggregate, t, kAggregatorId);
    const std::size_t agg_len = static_cast<std::size_t>(L * J) + (with_constraint ? 1 : 0);
    require_count(agg, agg_len, t);
    metrics.aggregate_reals = agg.element_count();
    sums.a_bar = to_matrix(agg.reals.data(), shape.L, shape.J);
    if (with_constraint) sums.c_bar = agg.reals.back();
    for (const auto& c : clients) {
      const RoundMessage q = expect(net, kServerId, MessageKind::QObjective, t, c.id());
      require_count(q, shape.J * c.feature_count(), t);
      metrics.upload_reals.push_back(q.element_count());
      const RowMatrix part = to_matrix(q.reals.data(), shape.J, c.feature_count());
      for (std::size_t k = 0; k < c.feature_count(); ++k) {
        sums.b_bar.col(static_cast<Eigen::Index>(c.feature_ids()[k])) = part.col(static_cast<Eigen::Index>(k));
      }
    }
    metrics.exchange_reals = I > 1 ? B * shape.J : 0;
  } catch (const RoundAbort&) {
    net.clear();
    throw;
  }
  return sums;
}

RoundMetrics run_round_feature(Server& server, std::vector<FeatureClient>& clients, Transport& net, unsigned t,
                               bool constrained) {
  const std::size_t bytes0 = net.bytes_sent();
  const std::size_t frames0 = net.frames_sent();
  RoundMetrics metrics;
  metrics.samples = server.config().batch;
  SampleStats avg = gather_feature_sums(server, clients, net, t, constrained, metrics);
  avg *= 1.0 / static_cast<double>(server.config().batch);
  const Server::StepResult step = server.ssca_step(t, avg, constrained);
  metrics.slack = step.slack;
  metrics.nu = step.nu;
  metrics.bytes = net.bytes_sent() - bytes0;
  metrics.frames = net.frames_sent() - frames0;
  return metrics;
}

}  // namespace ssca
