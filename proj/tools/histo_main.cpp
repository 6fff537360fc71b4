// histo: config-driven experiment runner.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "histo/config.hpp"
#include "histo/error.hpp"
#include "histo/nn/experiment.hpp"
#include "histo/nn/model.hpp"

namespace fs = std::filesystem;
using namespace histo;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kTraining = 4 };

Dims parse_dims_arg(const std::string& text) {
  const auto comma = text.find_first_of(",x");
  try {
    if (comma == std::string::npos) {
      const int s = std::stoi(text);
      return {s, s};
    }
    return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("invalid size '" + text + "'; expected N or H,W");
  }
}

struct RunFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::string run_dir;
  int dump_augmented = 0;
  bool resume = false;
  bool force = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool seed_and_dir = true) {
  cmd->add_flag("--resume", f.resume, "Reuse a completed run instead of retraining");
  cmd->add_flag("--force", f.force, "Clear and retrain an existing run");
  cmd->add_option("--dump-augmented", f.dump_augmented, "Write N augmented train samples to <run>/augmented")
      ->check(CLI::NonNegativeNumber);
  if (seed_and_dir) {
    cmd->add_option("--seed", f.seed, "Override train.seed");
    cmd->add_option("--run-dir", f.run_dir, "Override the run directory");
  }
}

nn::RunOptions run_options(const RunFlags& f, const CLI::App* cmd) {
  nn::RunOptions o;
  if (cmd->count("--seed")) o.seed = f.seed;
  if (!f.run_dir.empty()) o.run_dir = fs::path(f.run_dir);
  o.dump_augmented = f.dump_augmented;
  o.resume = f.resume;
  o.force = f.force;
  o.log = &std::cout;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Histopathology ROI classification: data preparation, training, evaluation, reports"};
  app.require_subcommand(1);
  app.footer("Configs are JSON files or preset:<name> (see `histo presets`).\n"
             "HISTO_RUN_ROOT sets the run root, HISTO_WEIGHTS_DIR the pretrained weights directory.");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset in the folder layout");
  std::string synth_out;
  SynthSpec synth_spec;
  std::string synth_size = "128";
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", synth_spec.classes, "Number of classes (1-7)");
  synth->add_option("--per-class", synth_spec.per_class, "Images per class");
  synth->add_option("--size", synth_size, "Image size N or H,W");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Build the manifest, split and upsampling; report counts");
  std::string prepare_config, prepare_out;
  prepare->add_option("--config", prepare_config, "Config file or preset:<name>")->required();
  prepare->add_option("--out", prepare_out, "Write the manifest CSV here");

  // train
  auto* train = app.add_subcommand("train", "Run an experiment: prepare, train, evaluate, report");
  RunFlags train_flags;
  train->add_option("--config", train_flags.config, "Config file or preset:<name>")->required();
  add_run_flags(train, train_flags);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Re-evaluate a run's best checkpoint");
  std::string eval_dir, eval_split;
  evaluate->add_option("--run-dir", eval_dir, "Run directory")->required();
  evaluate->add_option("--split", eval_split, "train, val or test (default: test, else val)");

  // report
  auto* report = app.add_subcommand("report", "Comparison table over completed runs");
  std::vector<std::string> report_runs;
  std::string report_out = ".";
  report->add_option("runs", report_runs, "Run directories")->required();
  report->add_option("--out", report_out, "Directory for table.csv and table.md");

  // describe
  auto* describe = app.add_subcommand("describe", "Print the model a config builds");
  std::string describe_config;
  bool describe_keys = false;
  describe->add_option("--config", describe_config, "Config file or preset:<name>")->required();
  describe->add_flag("--keys", describe_keys, "List backbone parameter and buffer names with shapes");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run several configs one after another");
  std::vector<std::string> sweep_configs;
  RunFlags sweep_flags;
  std::string sweep_report;
  sweep->add_option("--config", sweep_configs, "Config files or preset:<name> (repeatable)")->required();
  sweep->add_option("--report", sweep_report, "Write a comparison table of all runs here");
  add_run_flags(sweep, sweep_flags, false);
  sweep->add_option("--seed", sweep_flags.seed, "Override train.seed for every run");

  // presets
  auto* presets = app.add_subcommand("presets", "List named configs, or print one");
  std::string preset_show;
  presets->add_option("--show", preset_show, "Print this preset as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      synth_spec.dims = parse_dims_arg(synth_size);
      const auto n = generate_synthetic(synth_out, synth_spec);
      std::cout << "wrote " << n << " images to " << synth_out << '\n';
    } else if (*prepare) {
      const auto config = resolve_config(prepare_config);
      config.validate();
      const auto data = nn::prepare_data(config);
      for (Split s : {Split::train, Split::val, Split::test}) {
        std::cout << split_name(s) << ": " << data.manifest.split_size(s);
        for (const auto& [code, n] : data.manifest.class_counts(s)) std::cout << "  " << code_name(code) << ' ' << n;
        std::cout << '\n';
      }
      if (!data.report.empty()) std::cerr << data.report.warnings.size() << " warnings:\n" << data.report.to_text();
      if (!prepare_out.empty()) write_manifest_csv(data.manifest, prepare_out);
    } else if (*train) {
      const auto r = nn::run_experiment(resolve_config(train_flags.config), run_options(train_flags, train));
      std::cout << "run directory " << r.run_dir.string() << '\n';
    } else if (*evaluate) {
      std::optional<Split> split;
      if (!eval_split.empty()) split = parse_split(eval_split);
      nn::evaluate_run(eval_dir, split, &std::cout);
    } else if (*report) {
      std::vector<fs::path> dirs(report_runs.begin(), report_runs.end());
      const auto table = nn::report_runs(dirs, report_out);
      std::cout << table_markdown(table);
    } else if (*describe) {
      const auto model_config = resolve_config(describe_config).model;
      if (describe_keys) {
        auto backbone = nn::make_backbone_module(model_config.backbone);
        for (const auto& p : backbone->named_parameters()) std::cout << p.key() << ' ' << p.value().sizes() << '\n';
        for (const auto& b : backbone->named_buffers()) std::cout << b.key() << ' ' << b.value().sizes() << '\n';
      } else {
        std::cout << nn::describe(model_config);
      }
    } else if (*sweep) {
      std::vector<fs::path> dirs;
      for (const auto& c : sweep_configs) {
        std::cout << "== " << c << '\n';
        const auto r = nn::run_experiment(resolve_config(c), run_options(sweep_flags, sweep));
        dirs.push_back(r.run_dir);
      }
      if (!sweep_report.empty()) std::cout << table_markdown(nn::report_runs(dirs, sweep_report));
    } else if (*presets) {
      if (!preset_show.empty()) {
        const auto c = preset(preset_show);
        if (!c) throw ConfigError("unknown preset '" + preset_show + "'");
        std::cout << config_to_json(*c) << '\n';
      } else {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
