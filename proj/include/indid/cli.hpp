#pragma once

// Subcommand driver: generate | train | eval | ablate-horizon.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "indid/experiment.hpp"

namespace indid {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumeric = 4 };

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string data_dir;
  std::string checkpoint;
  std::string baseline;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::vector<std::string> overrides;
  bool timing = false;
};

inline ExperimentConfig resolve_config(const CliOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const auto& s : o.overrides) apply_override(cfg, s);
  if (o.seed) cfg.seed = *o.seed;
  cfg.sync_seed();
  return cfg;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Change-point detection experiments"};
  app.require_subcommand(1);
  CliOptions o;

  auto common = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--config,-c", o.config_path, "TOML experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out,-o", o.out_dir, "output directory")->required();
    if (needs_data) sub->add_option("--data,-d", o.data_dir, "dataset directory with train/ and test/")->required();
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", o.overrides, "section.key=value override (repeatable)");
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  common(gen, false);
  auto* tr = app.add_subcommand("train", "train a detector");
  common(tr, true);
  auto* ev = app.add_subcommand("eval", "score a checkpoint or a baseline on the test split");
  common(ev, true);
  auto* ck = ev->add_option("--checkpoint", o.checkpoint, "model.json from train");
  auto* bl = ev->add_option("--baseline", o.baseline, "cusum | pelt | binseg | oracle");
  ck->excludes(bl);
  ev->add_flag("--timing", o.timing, "add wall-clock time to metrics.json");
  auto* ab = app.add_subcommand("ablate-horizon", "sweep the relative delay horizon");
  common(ab, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const ExperimentConfig cfg = resolve_config(o);
    if (gen->parsed()) {
      cmd_generate(cfg, o.out_dir);
      out << "wrote dataset to " << o.out_dir << '\n';
    } else if (tr->parsed()) {
      const auto res = cmd_train(cfg, o.data_dir, o.out_dir, o.threads);
      for (const auto& ph : res.log.phases)
        out << "phase " << ph.phase << ": " << ph.epochs_run << " epochs, best val loss "
            << io::format_double(ph.best_val_loss) << " at epoch " << ph.best_epoch << '\n';
    } else if (ev->parsed()) {
      EvalTarget target;
      if (!o.checkpoint.empty()) target.checkpoint = o.checkpoint;
      if (!o.baseline.empty()) target.baseline = o.baseline;
      const auto rep = cmd_eval(cfg, o.data_dir, target, o.out_dir, o.threads, o.timing);
      out << rep.method << ": f1 " << (rep.best_f1() ? io::format_double(*rep.best_f1()) : "n/a") << ", mean_dd "
          << io::format_double(rep.best().mean_delay) << ", covering_max " << io::format_double(rep.covering_max)
          << '\n';
    } else if (ab->parsed()) {
      const auto res = cmd_ablate_horizon(cfg, o.data_dir, o.out_dir, o.threads);
      out << "ablation over " << res.rows.size() << " horizons written to " << o.out_dir << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace indid
