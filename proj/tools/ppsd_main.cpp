#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "ppsd/config.hpp"

namespace {

enum ExitCode { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed_override = -1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: $PPSD_OUT_DIR or ./out)");
  cmd->add_option("--seed", args.seed_override, "override the config seed");
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

ppsd::ExperimentConfig load(const CommonArgs& args) {
  ppsd::ExperimentConfig cfg = ppsd::load_config_file(args.config_path);
  if (args.seed_override >= 0) {
    cfg.engine.seed = static_cast<std::uint64_t>(args.seed_override);
    cfg.raw["seed"] = args.seed_override;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving push-pull simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, compare_args, audit_args, advise_args;
  CLI::App* cmd_run = app.add_subcommand("run", "execute one experiment, emit CSV + sidecar");
  add_common(cmd_run, run_args);
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "run the algorithm and the baseline on one instance");
  add_common(cmd_compare, compare_args);
  CLI::App* cmd_audit =
      app.add_subcommand("privacy-audit", "indistinguishability / attack / eavesdropper audits");
  add_common(cmd_audit, audit_args);
  CLI::App* cmd_advise = app.add_subcommand("advise", "theory constants and step-size advice");
  add_common(cmd_advise, advise_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (cmd_run->parsed()) {
      ppsd::run_experiment(load(run_args), ppsd::resolve_out_dir(run_args.out_dir),
                           run_args.quiet);
    } else if (cmd_compare->parsed()) {
      ppsd::compare_experiment(load(compare_args), ppsd::resolve_out_dir(compare_args.out_dir),
                               compare_args.quiet);
    } else if (cmd_audit->parsed()) {
      ppsd::privacy_audit_experiment(load(audit_args), ppsd::resolve_out_dir(audit_args.out_dir),
                                     audit_args.quiet);
    } else if (cmd_advise->parsed()) {
      ppsd::advise_experiment(load(advise_args), ppsd::resolve_out_dir(advise_args.out_dir),
                              advise_args.quiet);
    }
  } catch (const ppsd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}
