#include "dispbias/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dispbias/errors.hpp"
#include "dispbias/io.hpp"

namespace dispbias {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<double> alphas;
  std::optional<int> boot_B;
  std::string boot_scheme;
};

fs::path resolve(const fs::path& p, const RunConfig& c) {
  if (p.is_relative() && !c.source.empty()) return c.source.parent_path() / p;
  return p;
}

void apply_flags(const Flags& f, RunConfig& c) {
  if (f.seed) c.seed = *f.seed;
  if (f.threads) {
    c.threads = *f.threads;
  } else if (const char* env = std::getenv("DISPBIAS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) c.threads = static_cast<unsigned>(v);
  }
  if (!f.alphas.empty()) {
    c.alphas = f.alphas;
    c.sim_alphas = f.alphas;
  }
  if (f.boot_B) {
    c.boot_B = *f.boot_B;
    c.sim_bootstrap_B = *f.boot_B;
  }
  if (!f.boot_scheme.empty()) c.boot_scheme = boot_scheme_from_name(f.boot_scheme);
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  }
}

void emit(const Flags& f, const Json& report, std::ostream& out) {
  if (f.out.empty()) {
    out << dump_report(report);
  } else {
    write_report(f.out, report);
  }
}

int run_command(const std::string& command, const Flags& flags, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(flags.config);
  apply_flags(flags, cfg);

  if (command == "simulate") {
    const StudyConfig sc = study_config(cfg);
    const StudyReport sr = run_study(sc);
    Json report = report_header(command, sc.model, sc.covariate_names);
    report["study"] = study_json(sr);
    emit(flags, report, out);
    if (!flags.out.empty()) {
      fs::path table = flags.out;
      table.replace_extension(".csv");
      write_text(table, study_table_csv(sr));
    }
    return kExitOk;
  }

  const ModelSpec model = build_model(cfg);
  const auto start = start_values(cfg);
  fs::path data_path = flags.data.empty() ? resolve(cfg.data, cfg) : fs::path(flags.data);
  if (data_path.empty()) throw ConfigError("no data file: give --data or [data] path");
  const Dataset data = bind_dataset(read_csv(data_path), cfg);

  BootstrapPlan plan;
  if (command == "bootstrap") {
    plan.scheme = cfg.boot_scheme;
    plan.B = cfg.boot_B;
    plan.seed = cfg.seed;
    plan.policy = cfg.boot_policy;
    plan.threads = cfg.threads;
    plan.fit_options = cfg.fit_options;
    try {
      plan.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[bootstrap] ") + e.what());
    }
    if (plan.scheme == BootScheme::parametric && !model.family->samplable()) {
      throw ConfigError("family '" + model.family->name() +
                        "' has no sampler; use the nonparametric scheme");
    }
  }

  const FitResult fit = fit_mle(model, data, cfg.fit_options, start);
  Json report = report_header(command, model, data.names);
  report["data"] = {{"n", data.n()}};
  report["fit"] = fit_json(model, fit, cfg.alphas.front());
  if (!fit.converged) {
    emit(flags, report, out);
    err << "dispbias: fit did not converge (" << to_string(fit.status) << ", |U| = "
        << fit.score_norm << ")\n";
    return kExitNonConvergence;
  }
  if (command == "bias") report["bias"] = bias_json(bias_report(model, data, fit));
  if (command == "bootstrap") {
    const BootstrapResult br = bootstrap_bias(model, data, fit, plan);
    const BiasMatrices m = bias_matrices(model, data, fit);
    const MuPhiBias mp = bias_mu_phi(m,
                                     plan.scheme == BootScheme::parametric
                                         ? BiasSource::parametric_bootstrap
                                         : BiasSource::nonparametric_bootstrap,
                                     br.bias_hat);
    report["bootstrap"] = bootstrap_json(plan, br, mp);
  }
  emit(flags, report, out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dispersion-model fitting with second-order bias correction"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "model configuration file")->required();
  app.add_option("--data", flags.data, "data file (overrides [data] path)");
  app.add_option("--out", flags.out, "report file (default: standard output)");
  app.add_option("--seed", flags.seed, "random seed");
  app.add_option("--threads", flags.threads, "worker threads");
  app.add_option("--alpha", flags.alphas, "interval levels, comma separated")->delimiter(',');
  app.add_option("--boot-B", flags.boot_B, "bootstrap replicates");
  app.add_option("--boot-scheme", flags.boot_scheme, "parametric or nonparametric")
      ->check(CLI::IsMember({"parametric", "nonparametric"}));
  for (const char* name : {"fit", "bias", "bootstrap", "simulate"}) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dispbias: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return run_command(command, flags, out, err);
  } catch (const ConfigError& e) {
    err << "dispbias: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "dispbias: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    err << "dispbias: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    err << "dispbias: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const RankDeficientError& e) {
    err << "dispbias: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConvergenceError& e) {
    err << "dispbias: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const UnsupportedError& e) {
    err << "dispbias: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "dispbias: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "dispbias: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace dispbias
