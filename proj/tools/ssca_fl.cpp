// Command-line front end: run, sweep, check and preset.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssca/errors.hpp"
#include "ssca/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string transport = "inprocess";
  unsigned jobs = 1;
  std::string mnist_images;
  std::string mnist_labels;
  std::string synthetic;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "flat key = value config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output CSV (default: config 'output', else stdout)");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&o](std::uint64_t s) { o.seed = s, o.seed_given = true; }, "master seed override");
  cmd->add_option("--transport", o.transport, "message transport")
      ->check(CLI::IsMember({"inprocess", "socket"}));
  cmd->add_option("--jobs", o.jobs, "repetitions run concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--mnist-images", o.mnist_images, "IDX training images");
  cmd->add_option("--mnist-labels", o.mnist_labels, "IDX training labels");
  cmd->add_option("--synthetic", o.synthetic, "synthetic data N,P,L,sep,seed");
}

ssca::RunConfig resolve(const CommonOptions& o) {
  ssca::RunConfig cfg = ssca::load_config(o.config);
  if (o.seed_given) cfg.seed = o.seed;
  if (!o.synthetic.empty()) cfg.data = ssca::parse_synthetic_spec(o.synthetic);
  if (!o.mnist_images.empty() || !o.mnist_labels.empty()) {
    cfg.data.kind = ssca::DataSource::Kind::Idx;
    if (!o.mnist_images.empty()) cfg.data.images = o.mnist_images;
    if (!o.mnist_labels.empty()) cfg.data.labels = o.mnist_labels;
  }
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

ssca::TransportKind transport_of(const CommonOptions& o) {
  return o.transport == "socket" ? ssca::TransportKind::Socket : ssca::TransportKind::InProcess;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ssca::ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ssca::ConfigError("write failed for " + path);
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ssca::ConfigError("bad sweep value '" + item + "'");
    }
    if (used != item.size()) throw ssca::ConfigError("bad sweep value '" + item + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_run(const CommonOptions& o) {
  const ssca::RunConfig cfg = resolve(o);
  const ssca::DatasetSplit data = ssca::load_data(cfg.data);
  warn(ssca::check_config(cfg, data));
  const ssca::ExperimentResult res = ssca::run_experiment(cfg, data, transport_of(o), o.jobs);
  emit(cfg.output, ssca::render_csv(res));
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& lambdas, const std::string& ubounds) {
  if (lambdas.empty() == ubounds.empty()) throw ssca::ConfigError("give exactly one of --lambda or --ubound");
  const ssca::RunConfig cfg = resolve(o);
  const ssca::DatasetSplit data = ssca::load_data(cfg.data);
  warn(ssca::check_config(cfg, data));
  const auto kind = lambdas.empty() ? ssca::SweepKind::Ubound : ssca::SweepKind::Lambda;
  const auto values = parse_list(lambdas.empty() ? ubounds : lambdas);
  const auto points = ssca::run_tradeoff_sweep(cfg, data, kind, values, transport_of(o), o.jobs);
  emit(cfg.output, ssca::render_sweep_csv(cfg, kind, points));
  return 0;
}

int cmd_check(const std::string& path) {
  const ssca::RunConfig cfg = ssca::load_config(path);
  const ssca::ScheduleValidityReport rep = ssca::validate_pair(cfg.round.rho, cfg.round.gamma);
  std::cout << "rho   = " << ssca::describe(cfg.round.rho) << '\n'
            << "gamma = " << ssca::describe(cfg.round.gamma) << '\n'
            << "rho_ok                  = " << (rep.rho_ok ? "true" : "false") << '\n'
            << "gamma_square_summable   = " << (rep.gamma_square_summable ? "true" : "false") << '\n'
            << "gamma_over_rho_vanishes = " << (rep.gamma_over_rho_vanishes ? "true" : "false") << '\n';
  for (const auto& n : rep.notes) std::cout << "note: " << n << '\n';
  if (!rep.all_ok() && cfg.schedule_strict) {
    std::cerr << "error: schedule.strict is set and the schedules fail the checks\n";
    return kExitConfig;
  }
  return 0;
}

int cmd_preset(const std::string& name) {
  if (name.empty()) {
    for (const auto& n : ssca::preset_names()) std::cout << n << '\n';
    return 0;
  }
  std::cout << ssca::preset_text(name);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mini-batch SSCA federated learning simulator"};
  app.set_version_flag("--version", ssca::toolkit_version());
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run an experiment and write the per-round metrics CSV");
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  std::string lambdas;
  std::string ubounds;
  auto* sweep = app.add_subcommand("sweep", "final cost and norm across lambda or U values");
  add_common(sweep, sweep_opts);
  sweep->add_option("--lambda", lambdas, "comma-separated lambda values");
  sweep->add_option("--ubound", ubounds, "comma-separated U values");

  std::string check_path;
  auto* check = app.add_subcommand("check", "report the stepsize-schedule conditions");
  check->add_option("--config", check_path, "config file")->required()->check(CLI::ExistingFile);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "list presets or print one as config text");
  preset->add_option("name", preset_name, "preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, lambdas, ubounds);
    if (*check) return cmd_check(check_path);
    if (*preset) return cmd_preset(preset_name);
  } catch (const ssca::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ssca::IngestionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ssca::RoundAbort& e) {
    std::cerr << "round " << e.round() << " aborted: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
