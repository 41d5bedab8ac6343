#include "ssca/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "ssca/errors.hpp"

namespace ssca {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view v, const std::string& key) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a finite number, got '" + std::string(v) + "'");
  }
  return x;
}

std::uint64_t to_u64(std::string_view v, const std::string& key) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + std::string(v) + "'");
  }
  return x;
}

unsigned to_unsigned(std::string_view v, const std::string& key) {
  const std::uint64_t x = to_u64(v, key);
  if (x > 0xFFFFFFFFull) throw ConfigError(key + ": value too large");
  return static_cast<unsigned>(x);
}

bool to_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) return out;
    s.remove_prefix(comma + 1);
  }
}

using Setter = std::function<void(RunConfig&, std::string_view, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"algorithm",
       [](RunConfig& c, std::string_view v, const std::string& k) {
         const auto a = parse_algorithm(v);
         if (!a) throw ConfigError(k + ": unknown algorithm '" + std::string(v) + "'");
         c.round.algorithm = *a;
       }},
      {"rounds", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.rounds = to_unsigned(v, k); }},
      {"batch", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.batch = to_u64(v, k); }},
      {"clients", [](RunConfig& c, std::string_view v, const std::string& k) { c.clients = to_u64(v, k); }},
      {"client.sizes",
       [](RunConfig& c, std::string_view v, const std::string& k) {
         c.client_sizes.clear();
         for (auto part : split_commas(v)) c.client_sizes.push_back(to_u64(part, k));
       }},
      {"hidden", [](RunConfig& c, std::string_view v, const std::string& k) { c.hidden = to_u64(v, k); }},
      {"repetitions",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.repetitions = to_unsigned(v, k); }},
      {"seed", [](RunConfig& c, std::string_view v, const std::string& k) { c.seed = to_u64(v, k); }},
      {"tau", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.tau = to_double(v, k); }},
      {"lambda", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.lambda = to_double(v, k); }},
      {"ubound", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.ubound = to_double(v, k); }},
      {"penalty", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.penalty = to_double(v, k); }},
      {"penalty.stages",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.penalty_stages = to_unsigned(v, k); }},
      {"penalty.growth",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.penalty_growth = to_double(v, k); }},
      {"rho.a", [](RunConfig& c, std::string_view v, const std::string& k) { c.round.rho.coefficient = to_double(v, k); }},
      {"rho.alpha",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.round.rho.exponent = to_double(v, k); }},
      {"gamma.a",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.round.gamma.coefficient = to_double(v, k); }},
      {"gamma.alpha",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.round.gamma.exponent = to_double(v, k); }},
      {"schedule.strict",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.schedule_strict = to_bool(v, k); }},
      {"solver",
       [](RunConfig& c, std::string_view v, const std::string& k) {
         if (v == "closed-form") {
           c.round.solver = SolverKind::ClosedForm;
         } else if (v == "barrier") {
           c.round.solver = SolverKind::Barrier;
         } else {
           throw ConfigError(k + ": expected closed-form or barrier");
         }
       }},
      {"barrier.tol",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.round.barrier_tol = to_double(v, k); }},
      {"baseline.E",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.sgd.local_steps = to_unsigned(v, k); }},
      {"baseline.lr.a",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.sgd.lr.coefficient = to_double(v, k); }},
      {"baseline.lr.alpha",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.sgd.lr.exponent = to_double(v, k); }},
      {"baseline.momentum",
       [](RunConfig& c, std::string_view v, const std::string& k) { c.sgd.momentum = to_double(v, k); }},
      {"data.synthetic",
       [](RunConfig& c, std::string_view v, const std::string&) {
         const DataSource s = parse_synthetic_spec(v);
         c.data.kind = s.kind;
         c.data.n = s.n;
         c.data.p = s.p;
         c.data.l = s.l;
         c.data.separation = s.separation;
         c.data.seed = s.seed;
       }},
      {"data.mnist_images",
       [](RunConfig& c, std::string_view v, const std::string&) {
         c.data.kind = DataSource::Kind::Idx;
         c.data.images = v;
       }},
      {"data.mnist_labels",
       [](RunConfig& c, std::string_view v, const std::string&) {
         c.data.kind = DataSource::Kind::Idx;
         c.data.labels = v;
       }},
      {"data.mnist_test_images", [](RunConfig& c, std::string_view v, const std::string&) { c.data.test_images = v; }},
      {"data.mnist_test_labels", [](RunConfig& c, std::string_view v, const std::string&) { c.data.test_labels = v; }},
      {"init.scale", [](RunConfig& c, std::string_view v, const std::string& k) { c.init_scale = to_double(v, k); }},
      {"output", [](RunConfig& c, std::string_view v, const std::string&) { c.output = v; }},
      {"output.timing", [](RunConfig& c, std::string_view v, const std::string& k) { c.timing = to_bool(v, k); }},
  };
  return table;
}

struct PresetEntry {
  const char* name;
  Partition partition;
  std::size_t batch;
  double a1, a2, alpha, tau;
};

constexpr PresetEntry kPresets[] = {
    {"sample-10", Partition::Sample, 10, 0.9, 0.5, 0.1, 0.2},
    {"sample-100", Partition::Sample, 100, 0.3, 0.3, 0.1, 0.05},
    {"sample-6000", Partition::Sample, 6000, 0.2, 0.3, 0.1, 0.03},
    {"feature-10", Partition::Feature, 10, 0.9, 0.3, 0.3, 0.1},
    {"feature-100", Partition::Feature, 100, 0.9, 0.5, 0.1, 0.2},
    {"feature-1000", Partition::Feature, 1000, 0.3, 0.3, 0.1, 0.05},
};

const PresetEntry& find_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void apply_preset(RunConfig& c, const PresetEntry& p) {
  c.preset = p.name;
  c.round.batch = p.batch;
  c.round.rounds = 1000;
  c.round.penalty = 1e5;
  c.round.lambda = 1e-5;
  c.round.ubound = 0.13;
  c.round.rho = StepsizeSchedule::power(p.a1, p.alpha);
  c.round.gamma = StepsizeSchedule::power(p.a2, p.alpha);
  c.round.tau = p.tau;
  c.clients = 10;
  c.hidden = 128;
  c.repetitions = 10;
  c.sgd.local_steps = 1;
  c.sgd.lr = StepsizeSchedule::power(0.3, 0.3);
  c.sgd.momentum = 0.0;
}

// Momentum runs use a constant rate 0.3 and momentum 0.1 unless overridden.
void apply_momentum_preset(RunConfig& c) {
  c.sgd.lr = StepsizeSchedule::power(0.3, 0.0);
  c.sgd.momentum = 0.1;
}

const char* solver_name(SolverKind k) { return k == SolverKind::Barrier ? "barrier" : "closed-form"; }

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(v[k]);
  }
  return out;
}

std::vector<std::size_t> block_sizes(const RunConfig& cfg, const DatasetSplit& data) {
  if (partition_of(cfg.round.algorithm) == Partition::Feature) return {data.train.size()};
  std::vector<std::size_t> out;
  for (const auto& b : partition_samples(data.train.size(), cfg.clients,
                                         cfg.client_sizes.empty() ? std::nullopt
                                                                  : std::optional(cfg.client_sizes))) {
    out.push_back(b.size());
  }
  return out;
}

RoundRecord evaluate(const RunConfig& cfg, const DatasetSplit& data, const NnParams& w, unsigned t) {
  RoundRecord r;
  r.round = t;
  r.training_cost = loss(w, data.train.features, data.train.labels);
  r.test_accuracy = accuracy(w, data.test.features, data.test.labels);
  r.l2_norm = w.squared_norm();
  r.constraint_value = r.training_cost - cfg.round.ubound;
  return r;
}

void put_row(std::ostringstream& out, const std::string& rep, const RoundRecord& r, bool constrained, bool timing) {
  out << rep << ',' << r.round << ',' << format_double(r.training_cost) << ',' << format_double(r.test_accuracy)
      << ',' << format_double(r.l2_norm);
  if (constrained) out << ',' << format_double(r.constraint_value) << ',' << format_double(r.slack);
  out << ',' << r.samples << ',';
  if (timing) out << format_double(r.elapsed_ms);
  out << '\n';
}

}  // namespace

std::string toolkit_version() { return "ssca-fl 0.1.0"; }

std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return {buf, p};
}

DataSource parse_synthetic_spec(std::string_view spec) {
  const auto parts = split_commas(spec);
  if (parts.size() != 5) throw ConfigError("synthetic spec must be N,P,L,sep,seed");
  DataSource s;
  s.kind = DataSource::Kind::Synthetic;
  s.n = to_u64(parts[0], "data.synthetic N");
  s.p = to_u64(parts[1], "data.synthetic P");
  s.l = to_u64(parts[2], "data.synthetic L");
  s.separation = to_double(parts[3], "data.synthetic sep");
  s.seed = to_u64(parts[4], "data.synthetic seed");
  if (s.n == 0 || s.p == 0 || s.l == 0) throw ConfigError("synthetic N, P and L must be positive");
  return s;
}

RunConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key != "preset" && setters().count(key) == 0) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": repeated key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    entries.emplace_back(std::move(key), value);
  }

  RunConfig cfg;
  // The algorithm decides the baseline flavour, so it goes first; a preset
  // alone implies the SSCA algorithm of its partition.
  for (const auto& [k, v] : entries) {
    if (k == "algorithm") setters().at(k)(cfg, v, k);
  }
  for (const auto& [k, v] : entries) {
    if (k != "preset") continue;
    const PresetEntry& p = find_preset(v);
    if (seen.count("algorithm") == 0) {
      cfg.round.algorithm =
          p.partition == Partition::Sample ? Algorithm::SscaSampleUncon : Algorithm::SscaFeatureUncon;
    }
    apply_preset(cfg, p);
  }
  if (uses_momentum(cfg.round.algorithm)) apply_momentum_preset(cfg);
  for (const auto& [k, v] : entries) {
    if (k == "preset" || k == "algorithm") continue;
    try {
      setters().at(k)(cfg, v, k);
    } catch (const ConfigError& e) {
      throw ConfigError("config key " + std::string(e.what()));
    }
  }
  if (!cfg.preset.empty() && partition_of(cfg.round.algorithm) != find_preset(cfg.preset).partition) {
    throw ConfigError("preset '" + cfg.preset + "' does not match algorithm " + algorithm_name(cfg.round.algorithm));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  const auto kv = [&](const char* k, const std::string& v) { out << k << " = " << v << '\n'; };
  if (!c.preset.empty()) kv("preset", c.preset);
  kv("algorithm", algorithm_name(c.round.algorithm));
  kv("rounds", std::to_string(c.round.rounds));
  kv("batch", std::to_string(c.round.batch));
  kv("clients", std::to_string(c.clients));
  if (!c.client_sizes.empty()) kv("client.sizes", join_sizes(c.client_sizes));
  kv("hidden", std::to_string(c.hidden));
  kv("repetitions", std::to_string(c.repetitions));
  kv("seed", std::to_string(c.seed));
  kv("tau", format_double(c.round.tau));
  kv("lambda", format_double(c.round.lambda));
  kv("ubound", format_double(c.round.ubound));
  kv("penalty", format_double(c.round.penalty));
  kv("penalty.stages", std::to_string(c.penalty_stages));
  kv("penalty.growth", format_double(c.penalty_growth));
  kv("rho.a", format_double(c.round.rho.coefficient));
  kv("rho.alpha", format_double(c.round.rho.exponent));
  kv("gamma.a", format_double(c.round.gamma.coefficient));
  kv("gamma.alpha", format_double(c.round.gamma.exponent));
  kv("schedule.strict", c.schedule_strict ? "true" : "false");
  kv("solver", solver_name(c.round.solver));
  kv("barrier.tol", format_double(c.round.barrier_tol));
  kv("baseline.E", std::to_string(c.sgd.local_steps));
  kv("baseline.lr.a", format_double(c.sgd.lr.coefficient));
  kv("baseline.lr.alpha", format_double(c.sgd.lr.exponent));
  kv("baseline.momentum", format_double(c.sgd.momentum));
  if (c.data.kind == DataSource::Kind::Synthetic) {
    kv("data.synthetic", std::to_string(c.data.n) + "," + std::to_string(c.data.p) + "," + std::to_string(c.data.l) +
                             "," + format_double(c.data.separation) + "," + std::to_string(c.data.seed));
  } else {
    kv("data.mnist_images", c.data.images);
    kv("data.mnist_labels", c.data.labels);
    if (!c.data.test_images.empty()) kv("data.mnist_test_images", c.data.test_images);
    if (!c.data.test_labels.empty()) kv("data.mnist_test_labels", c.data.test_labels);
  }
  kv("init.scale", format_double(c.init_scale));
  kv("output.timing", c.timing ? "true" : "false");
  return out.str();
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string preset_text(std::string_view name) {
  RunConfig c;
  const PresetEntry& p = find_preset(name);
  c.round.algorithm = p.partition == Partition::Sample ? Algorithm::SscaSampleUncon : Algorithm::SscaFeatureUncon;
  apply_preset(c, p);
  c.data.kind = DataSource::Kind::Idx;
  c.data.images = "train-images-idx3-ubyte";
  c.data.labels = "train-labels-idx1-ubyte";
  c.data.test_images = "t10k-images-idx3-ubyte";
  c.data.test_labels = "t10k-labels-idx1-ubyte";
  return render_config(c);
}

DatasetSplit load_data(const DataSource& s) {
  if (s.kind == DataSource::Kind::Synthetic) return synth_split(s.seed, s.n, s.p, s.l, s.separation);
  if (s.images.empty() || s.labels.empty()) {
    throw ConfigError("IDX data needs both data.mnist_images and data.mnist_labels");
  }
  DatasetSplit out;
  out.train = load_idx(s.images, s.labels);
  if (s.test_images.empty() != s.test_labels.empty()) {
    throw ConfigError("give both data.mnist_test_images and data.mnist_test_labels, or neither");
  }
  if (s.test_images.empty()) {
    out.test = out.train;
  } else {
    out.test = load_idx(s.test_images, s.test_labels);
    if (out.test.feature_count() != out.train.feature_count()) {
      throw ConfigError("test images have a different pixel count from the training images");
    }
    // Labels absent from the training file cannot be predicted; widen to the common class count.
    const auto L = std::max(out.train.labels.cols(), out.test.labels.cols());
    for (RawDataset* d : {&out.train, &out.test}) {
      if (d->labels.cols() < L) {
        RowMatrix wide = RowMatrix::Zero(d->labels.rows(), L);
        wide.leftCols(d->labels.cols()) = d->labels;
        d->labels = std::move(wide);
      }
    }
  }
  return out;
}

std::vector<std::string> check_config(const RunConfig& cfg, const DatasetSplit& data) {
  if (cfg.clients == 0) throw ConfigError("clients must be at least 1");
  if (cfg.clients > kServerId) throw ConfigError("too many clients for 16-bit node ids");
  if (cfg.hidden == 0) throw ConfigError("hidden must be at least 1");
  if (cfg.repetitions == 0) throw ConfigError("repetitions must be at least 1");
  if (!(cfg.init_scale >= 0.0)) throw ConfigError("init.scale must be nonnegative");
  if (cfg.penalty_stages == 0) throw ConfigError("penalty.stages must be at least 1");
  if (cfg.penalty_stages > cfg.round.rounds) throw ConfigError("penalty.stages exceeds rounds");
  if (!(cfg.penalty_growth >= 1.0)) throw ConfigError("penalty.growth must be at least 1");
  if (!cfg.client_sizes.empty() && cfg.client_sizes.size() != cfg.clients) {
    throw ConfigError("client.sizes must list one size per client");
  }
  const Partition part = partition_of(cfg.round.algorithm);
  if (part == Partition::Feature && cfg.clients > data.train.feature_count()) {
    throw ConfigError("more clients than features");
  }
  if (data.train.size() > 0xFFFFFFFFull) throw ConfigError("dataset too large for 32-bit batch indices");
  std::vector<std::size_t> blocks;
  try {
    blocks = block_sizes(cfg, data);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  validate_round_config(cfg.round, blocks);
  if (!is_ssca(cfg.round.algorithm)) {
    validate_sgd_config(cfg.sgd, cfg.round.batch, part == Partition::Sample ? blocks : std::vector<std::size_t>{});
  }

  std::vector<std::string> warnings;
  if (is_ssca(cfg.round.algorithm)) {
    const ScheduleValidityReport rep = validate_pair(cfg.round.rho, cfg.round.gamma);
    if (!rep.all_ok()) {
      if (cfg.schedule_strict) {
        std::string why = "stepsize schedules violate the convergence conditions";
        for (const auto& n : rep.notes) why += "; " + n;
        throw ConfigError(why);
      }
      warnings = rep.notes;
    }
  }
  return warnings;
}

RepetitionResult run_repetition(const RunConfig& cfg, const DatasetSplit& data, unsigned rep,
                                TransportKind transport) {
  const std::uint64_t seed = cfg.seed + rep;
  const Algorithm alg = cfg.round.algorithm;
  const bool constrained = is_constrained(alg);
  const NnShape shape{data.train.classes(), cfg.hidden, data.train.feature_count()};
  SeededRng init_rng(seed, kInitStream);
  Server server(NnParams::random_uniform(shape, init_rng, cfg.init_scale), cfg.round, seed);

  std::vector<std::uint16_t> nodes{kServerId};
  for (std::size_t i = 0; i < cfg.clients; ++i) nodes.push_back(static_cast<std::uint16_t>(i));
  auto net = make_transport(transport, nodes);

  std::vector<SampleClient> sample_clients;
  std::vector<FeatureClient> feature_clients;
  if (partition_of(alg) == Partition::Sample) {
    const auto blocks = partition_samples(data.train.size(), cfg.clients,
                                          cfg.client_sizes.empty() ? std::nullopt : std::optional(cfg.client_sizes));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      sample_clients.emplace_back(static_cast<std::uint16_t>(i), gather_rows(data.train.features, blocks[i]),
                                  gather_rows(data.train.labels, blocks[i]), seed);
    }
  } else {
    const auto blocks = partition_features(data.train.feature_count(), cfg.clients);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      feature_clients.emplace_back(static_cast<std::uint16_t>(i), blocks[i],
                                   gather_columns(data.train.features, blocks[i]), data.train.labels, cfg.hidden);
    }
  }

  const unsigned T = cfg.round.rounds;
  const unsigned stages = constrained ? cfg.penalty_stages : 1;
  RepetitionResult out;
  unsigned stage = 0;
  unsigned stage_start = 1;
  for (unsigned t = 1; t <= T; ++t) {
    // Penalty continuation: restart the surrogate from the current model with a larger c.
    const unsigned boundary = static_cast<unsigned>((static_cast<std::uint64_t>(T) * (stage + 1)) / stages) + 1;
    if (t == boundary && stage + 1 < stages) {
      ++stage;
      stage_start = t;
      server.reset_surrogate();
      server.set_penalty(cfg.round.penalty * std::pow(cfg.penalty_growth, stage));
    }
    const unsigned local_t = t - stage_start + 1;

    RoundRecord rec = evaluate(cfg, data, server.model(), t);
    const auto start = std::chrono::steady_clock::now();
    RoundMetrics m;
    switch (alg) {
      case Algorithm::SscaSampleUncon:
      case Algorithm::SscaSampleCon:
        m = run_round_sample(server, sample_clients, *net, local_t, constrained);
        break;
      case Algorithm::SscaFeatureUncon:
      case Algorithm::SscaFeatureCon:
        m = run_round_feature(server, feature_clients, *net, local_t, constrained);
        break;
      case Algorithm::SgdSample:
      case Algorithm::SgdmSample:
        m = sgd_sample_round(server, sample_clients, *net, t, cfg.sgd);
        break;
      case Algorithm::SgdFeature:
      case Algorithm::SgdmFeature:
        m = sgd_feature_round(server, feature_clients, *net, t, cfg.sgd);
        break;
    }
    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rec.slack = m.slack;
    rec.samples = m.samples;
    out.rows.push_back(rec);
  }
  out.final_model = server.model();
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg, const DatasetSplit& data, TransportKind transport,
                                unsigned jobs) {
  check_config(cfg, data);
  ExperimentResult res;
  res.config = cfg;
  res.reps.resize(cfg.repetitions);
  jobs = std::max(1u, jobs);
  for (unsigned first = 0; first < cfg.repetitions; first += jobs) {
    const unsigned last = std::min(cfg.repetitions, first + jobs);
    std::vector<std::future<RepetitionResult>> pending;
    for (unsigned r = first; r < last; ++r) {
      if (jobs == 1) {
        res.reps[r] = run_repetition(cfg, data, r, transport);
      } else {
        pending.push_back(std::async(std::launch::async, [&, r] { return run_repetition(cfg, data, r, transport); }));
      }
    }
    for (std::size_t k = 0; k < pending.size(); ++k) res.reps[first + k] = pending[k].get();
  }

  const double R = static_cast<double>(cfg.repetitions);
  for (unsigned t = 0; t < cfg.round.rounds; ++t) {
    RoundRecord m;
    m.round = t + 1;
    for (const auto& rep : res.reps) {
      const RoundRecord& r = rep.rows[t];
      m.training_cost += r.training_cost / R;
      m.test_accuracy += r.test_accuracy / R;
      m.l2_norm += r.l2_norm / R;
      m.constraint_value += r.constraint_value / R;
      m.slack += r.slack / R;
      m.elapsed_ms += r.elapsed_ms / R;
      m.samples = r.samples;
    }
    res.mean.push_back(m);
  }
  return res;
}

std::string render_csv(const ExperimentResult& res) {
  const RunConfig& cfg = res.config;
  const bool constrained = is_constrained(cfg.round.algorithm);
  std::ostringstream out;
  out << "# toolkit = " << toolkit_version() << '\n';
  std::istringstream lines(render_config(cfg));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << "rep,round,training_cost,test_accuracy,l2_norm";
  if (constrained) out << ",constraint_value,slack";
  out << ",samples,elapsed_ms\n";
  for (std::size_t r = 0; r < res.reps.size(); ++r) {
    for (const auto& row : res.reps[r].rows) put_row(out, std::to_string(r), row, constrained, cfg.timing);
  }
  for (const auto& row : res.mean) put_row(out, "mean", row, constrained, cfg.timing);
  return out.str();
}

std::vector<SweepPoint> run_tradeoff_sweep(const RunConfig& base, const DatasetSplit& data, SweepKind kind,
                                           const std::vector<double>& values, TransportKind transport,
                                           unsigned jobs) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (kind == SweepKind::Lambda && is_constrained(base.round.algorithm)) {
    throw ConfigError("a lambda sweep needs an unconstrained algorithm");
  }
  if (kind == SweepKind::Ubound && !is_constrained(base.round.algorithm)) {
    throw ConfigError("a ubound sweep needs a constrained algorithm");
  }
  std::vector<SweepPoint> out;
  for (double v : values) {
    RunConfig cfg = base;
    (kind == SweepKind::Lambda ? cfg.round.lambda : cfg.round.ubound) = v;
    const ExperimentResult res = run_experiment(cfg, data, transport, jobs);
    out.push_back({v, res.mean.back().training_cost, res.mean.back().l2_norm});
  }
  return out;
}

std::string render_sweep_csv(const RunConfig& base, SweepKind kind, const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "# toolkit = " << toolkit_version() << '\n';
  std::istringstream lines(render_config(base));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << (kind == SweepKind::Lambda ? "lambda" : "ubound") << ",final_training_cost,final_l2_norm\n";
  for (const auto& p : points) {
    out << format_double(p.value) << ',' << format_double(p.final_cost) << ',' << format_double(p.final_l2) << '\n';
  }
  return out.str();
}

}  // namespace ssca
