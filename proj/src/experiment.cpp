#include "histo/nn/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "histo/error.hpp"
#include "json.hpp"

namespace histo::nn {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw TrainingError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> class_names(int num_classes) {
  std::vector<std::string> names;
  for (int i = 0; i < num_classes; ++i) names.emplace_back(code_name(static_cast<ClassCode>(i)));
  return names;
}

PreprocessSpec preprocess_spec(const ExperimentConfig& config) {
  PreprocessSpec spec;
  spec.target_dims = config.preprocess.target_dims;
  spec.gray_noise = config.preprocess.gray_noise;
  spec.luminance_threshold = config.preprocess.luminance_threshold;
  spec.stain = config.preprocess.stain;
  return spec;
}

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n' << std::flush;
}

json row_json(const ReportRow& r) {
  return {{"model", r.model},     {"image_size", r.image_size},   {"augmentation", r.augmentation},
          {"dropout", r.dropout}, {"loss", r.loss},               {"accuracy", r.accuracy},
          {"weighted_f1", r.weighted_f1}, {"sensitivity", r.sensitivity}, {"run_dir", r.run_dir}};
}

ReportRow row_from_json(const json& j) {
  ReportRow r;
  r.model = j.at("model").get<std::string>();
  r.image_size = j.at("image_size").get<std::string>();
  r.augmentation = j.at("augmentation").get<std::string>();
  r.dropout = j.at("dropout").get<double>();
  r.loss = j.at("loss").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  r.weighted_f1 = j.at("weighted_f1").get<double>();
  r.sensitivity = j.at("sensitivity").get<double>();
  r.run_dir = j.value("run_dir", "");
  return r;
}

void write_report(const fs::path& run_dir, const ExperimentConfig& config, const EvaluationResult& e) {
  const fs::path dir = run_dir / run_files::kReport;
  const auto names = class_names(config.model.num_classes);
  json per_class = json::array();
  for (std::size_t c = 0; c < e.metrics.per_class.size(); ++c) {
    const auto& m = e.metrics.per_class[c];
    per_class.push_back({{"class", names[c]},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support},
                         {"false_negative_rate", m.false_negative_rate},
                         {"false_positive_rate", m.false_positive_rate},
                         {"precision_undefined", m.precision_undefined},
                         {"recall_undefined", m.recall_undefined},
                         {"f1_undefined", m.f1_undefined}});
  }
  const json metrics = {{"split", split_name(e.split)},
                        {"accuracy", e.metrics.accuracy},
                        {"weighted_f1", e.metrics.weighted_f1},
                        {"sensitivity", e.metrics.sensitivity},
                        {"weighted_recall", e.metrics.weighted_recall},
                        {"macro_f1", e.metrics.macro_f1},
                        {"total", e.metrics.total},
                        {"confusion", e.confusion.counts()},
                        {"per_class", per_class}};
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "metrics.txt",
             "split " + std::string(split_name(e.split)) + "\n" + metrics_text(e.metrics, names));
  write_text(dir / "confusion.csv", confusion_csv(e.confusion, names));
  write_confusion_heatmap(e.confusion, names, dir / "confusion.png");
  write_text(dir / "row.json", row_json(e.row).dump(2) + "\n");
  const auto table = build_table({e.row});
  write_text(dir / "table.csv", table_csv(table));
  write_text(dir / "table.md", table_markdown(table));
}

EvaluationResult read_report(const fs::path& run_dir) {
  const fs::path dir = run_dir / run_files::kReport;
  const json m = json::parse(read_text(dir / "metrics.json"));
  EvaluationResult e;
  e.split = parse_split(m.at("split").get<std::string>());
  e.confusion = ConfusionMatrix(m.at("confusion").get<std::vector<std::vector<std::int64_t>>>());
  e.metrics = compute_metrics(e.confusion);
  e.row = row_from_json(json::parse(read_text(dir / "row.json")));
  return e;
}

EvaluationResult evaluate_model(HistoNet& model, const ExperimentConfig& config, const PreparedData& data,
                                ImageSource& images, std::optional<Split> split, const fs::path& run_dir) {
  EvaluationResult e;
  e.split = split.value_or(data.manifest.split_size(Split::test) > 0 ? Split::test : Split::val);
  if (data.manifest.split_size(e.split) == 0) {
    throw DataError(std::string(split_name(e.split)) + " split is empty; nothing to evaluate");
  }
  const auto p = predict(model, data.manifest, e.split, images, config.train.eval_batch_size);
  e.confusion = confusion_of(p, static_cast<std::size_t>(config.model.num_classes));
  e.metrics = compute_metrics(e.confusion);
  e.row = report_row(config, e.metrics);
  e.row.run_dir = run_dir.string();
  return e;
}

// Files a run writes; only these are cleared when a run directory is reused.
const char* const kRunEntries[] = {run_files::kConfig,  run_files::kManifest, run_files::kWarnings,
                                   run_files::kMetricsLog, run_files::kCheckpoints, run_files::kReport,
                                   run_files::kDone,    run_files::kFailed,   "augmented"};

void clear_run(const fs::path& dir) {
  for (const char* name : kRunEntries) {
    std::error_code ec;
    fs::remove_all(dir / name, ec);
    if (ec) throw TrainingError("cannot clear " + (dir / name).string() + ": " + ec.message());
  }
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  const auto& d = config.dataset;
  PreparedData out;
  if (d.root.empty()) throw ConfigError("dataset.root is not set");
  if (d.synthetic && !fs::exists(d.root)) generate_synthetic(d.root, *d.synthetic);
  auto loaded = load_manifest(d.root, d.layout, d.csv);
  out.report = std::move(loaded.report);
  out.manifest = std::move(loaded.manifest);
  if (d.split_mode == SplitMode::custom) {
    out.manifest = custom_split(out.manifest, d.split_probs, d.split_seed, &out.report);
  }
  if (d.upsample_target) out.manifest = upsample(out.manifest, *d.upsample_target, d.upsample_seed);

  if (config.preprocess.stain == StainMethod::reference_based) {
    fs::path ref = config.preprocess.stain_reference;
    if (ref.empty()) {
      const auto train = out.manifest.indices(Split::train);
      if (train.empty()) throw DataError("no train image to take the stain reference from");
      ref = out.manifest.records()[train.front()].image_path;
    }
    PreprocessSpec spec = preprocess_spec(config);
    spec.stain = StainMethod::none;
    out.stain_reference = compute_stain_stats(apply_preprocess(load_image(ref), spec));
    out.stain_reference_source = ref;
  }
  return out;
}

PipelineImageSource::PipelineImageSource(const ExperimentConfig& config, const PreparedData& data,
                                         std::size_t cache_bytes)
    : config_(config), data_(data), spec_(preprocess_spec(config)), budget_(cache_bytes) {
  spec_.stain_reference = data.stain_reference;
  if (config.tiling) spec_.target_dims.reset();  // tiles are taken at full resolution
}

std::size_t PipelineImageSource::default_cache_bytes() {
  std::size_t mb = 2048;
  if (const char* v = std::getenv("HISTO_CACHE_MB"); v && *v) mb = std::strtoull(v, nullptr, 10);
  return mb << 20;
}

ImageBuffer PipelineImageSource::load(std::size_t record_index) {
  const auto& rec = data_.manifest.records().at(record_index);
  ImageBuffer image = apply_preprocess(load_image(rec.image_path), spec_);
  if (config_.tiling) {
    TileSpec t = *config_.tiling;
    t.selection_seed ^= fnv1a(rec.image_path.generic_string());
    const auto tiles = extract_tiles(image, t, rec.id);
    image = merge_tiles(tiles, t.canvas_dims);
  }
  if (Dims{image.height(), image.width()} != config_.model.input_dims) {
    throw DataError(rec.image_path.string() + ": preprocessed to " + to_string({image.height(), image.width()}) +
                    " but the model expects " + to_string(config_.model.input_dims));
  }
  return image;
}

ImageBuffer PipelineImageSource::get(std::size_t record_index) {
  const std::string key = data_.manifest.records().at(record_index).image_path.string();
  if (auto it = cache_.find(key); it != cache_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.pos);
    return it->second.image;
  }
  ImageBuffer image = load(record_index);
  const std::size_t bytes = image.data().size();
  if (bytes > budget_) return image;
  while (used_ + bytes > budget_ && !lru_.empty()) {
    auto victim = cache_.find(lru_.back());
    used_ -= victim->second.image.data().size();
    cache_.erase(victim);
    lru_.pop_back();
  }
  lru_.push_front(key);
  cache_.emplace(key, Entry{image, lru_.begin()});
  used_ += bytes;
  return image;
}

ReportRow report_row(const ExperimentConfig& config, const MetricsReport& metrics) {
  ReportRow r;
  r.model = std::string(backbone_display_name(config.model.backbone));
  if (config.model.head == HeadType::pyramid) r.model += " Pyramid";
  if (config.tiling) r.model += " with Tiling";
  r.image_size = to_string(config.model_input_dims());
  std::vector<std::string> aug;
  const auto& a = config.train.augment;
  if (a.cutmix_prob > 0 && a.mixup_prob > 0) {
    aug.emplace_back("CUTMIX and MIXUP");
  } else if (a.cutmix_prob > 0) {
    aug.emplace_back("CUTMIX");
  } else if (a.mixup_prob > 0) {
    aug.emplace_back("MIXUP");
  }
  if (config.preprocess.stain == StainMethod::reference_based) aug.emplace_back("Stain Normalization");
  if (aug.empty()) {
    r.augmentation = "NO";
  } else {
    for (std::size_t i = 0; i < aug.size(); ++i) r.augmentation += (i ? " + " : "") + aug[i];
  }
  r.dropout = config.model.dropout;
  r.loss = std::string(loss_display_name(config.train.loss.kind));
  r.accuracy = metrics.accuracy;
  r.weighted_f1 = metrics.weighted_f1;
  r.sensitivity = metrics.sensitivity;
  return r;
}

ExperimentConfig effective_config(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) {
    config.train.seed = *options.seed;
    config.train.sampler.seed = *options.seed;
  }
  if (options.run_dir) config.run_dir = *options.run_dir;
  return config;
}

void dump_augmented(const ExperimentConfig& config, const PreparedData& data, ImageSource& images, int n,
                    const fs::path& out_dir) {
  const auto train = data.manifest.indices(Split::train);
  const std::size_t count = std::min<std::size_t>(train.size(), static_cast<std::size_t>(std::max(n, 0)));
  if (count == 0) return;
  Rng rng = worker_rng(config.train.seed, 1, 0);
  std::vector<ImageBuffer> batch;
  for (std::size_t i = 0; i < count; ++i) batch.push_back(apply_spatial(images.get(train[i]), config.train.augment, rng));
  const auto plan = plan_batch_mix(count, {batch[0].height(), batch[0].width()}, config.train.augment, rng);
  batch = mix_images(batch, plan);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& rec = data.manifest.records()[train[i]];
    std::ostringstream name;
    name << i << '_' << rec.id << ".png";
    save_png(batch[i], out_dir / name.str());
  }
}

ExperimentResult run_experiment(const ExperimentConfig& input, const RunOptions& options) {
  const ExperimentConfig config = effective_config(input, options);
  config.validate();
  ExperimentResult result;
  result.run_dir = resolve_run_dir(config);
  const fs::path& dir = result.run_dir;

  if (fs::exists(dir / run_files::kDone) && !options.force) {
    if (!options.resume) {
      throw ConfigError("run directory " + dir.string() +
                        " already holds a completed run; pass --resume to reuse it or --force to retrain");
    }
    say(options.log, "reusing completed run in " + dir.string());
    result.reused = true;
    result.evaluation = read_report(dir);
    result.training.best_checkpoint = dir / run_files::kCheckpoints / "best.pt";
    result.training.last_checkpoint = dir / run_files::kCheckpoints / "last.pt";
    return result;
  }
  // Anything short of a completed run starts over.
  clear_run(dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw TrainingError("cannot create run directory " + dir.string() + ": " + ec.message());
  write_text(dir / run_files::kConfig, config_to_json(config));

  try {
    say(options.log, "preparing data from " + config.dataset.root.string());
    const PreparedData data = prepare_data(config);
    write_manifest_csv(data.manifest, dir / run_files::kManifest);
    write_text(dir / run_files::kWarnings, data.report.to_text());
    say(options.log, std::to_string(data.manifest.split_size(Split::train)) + " train, " +
                         std::to_string(data.manifest.split_size(Split::val)) + " val, " +
                         std::to_string(data.manifest.split_size(Split::test)) + " test samples, " +
                         std::to_string(data.report.warnings.size()) + " warnings");
    PipelineImageSource images(config, data);
    if (options.dump_augmented > 0) dump_augmented(config, data, images, options.dump_augmented, dir / "augmented");

    TrainOutputs outputs;
    outputs.checkpoint_dir = dir / run_files::kCheckpoints;
    outputs.metrics_log = dir / run_files::kMetricsLog;
    write_text(outputs.metrics_log, "");
    outputs.on_epoch = [&](const EpochRecord& r) {
      std::ostringstream line;
      line << "epoch " << r.epoch << "/" << config.train.epochs << "  loss " << r.train_loss << "  lr " << r.lr
           << "  val acc " << format3(r.val_accuracy) << "  val wF1 " << format3(r.val_weighted_f1) << "  ("
           << format3(r.seconds) << " s)";
      say(options.log, line.str());
    };
    result.training = train(config.model, config.train, data.manifest, images, outputs);

    auto best = load_checkpoint(result.training.best_checkpoint);
    result.evaluation = evaluate_model(best.model, config, data, images, std::nullopt, dir);
    write_report(dir, config, result.evaluation);
    say(options.log, std::string(split_name(result.evaluation.split)) + " accuracy " +
                         format3(result.evaluation.metrics.accuracy) + ", weighted F1 " +
                         format3(result.evaluation.metrics.weighted_f1) + ", sensitivity " +
                         format3(result.evaluation.metrics.sensitivity));
    write_text(dir / run_files::kDone, "");
  } catch (const std::exception& e) {
    try {
      write_text(dir / run_files::kFailed, std::string(e.what()) + "\n");
    } catch (...) {
      // The original error matters more than the marker.
    }
    throw;
  }
  return result;
}

EvaluationResult evaluate_run(const fs::path& run_dir, std::optional<Split> split, std::ostream* log) {
  const fs::path cfg_path = run_dir / run_files::kConfig;
  if (!fs::is_regular_file(cfg_path)) throw ConfigError("no " + cfg_path.string() + "; is this a run directory?");
  ExperimentConfig config = load_config(cfg_path);
  config.run_dir = run_dir;
  const PreparedData data = prepare_data(config);
  PipelineImageSource images(config, data);
  auto best = load_checkpoint(run_dir / run_files::kCheckpoints / "best.pt");
  configure_runtime(config.train);
  auto e = evaluate_model(best.model, config, data, images, split, run_dir);
  write_report(run_dir, config, e);
  say(log, std::string(split_name(e.split)) + " accuracy " + format3(e.metrics.accuracy) + ", weighted F1 " +
               format3(e.metrics.weighted_f1) + ", sensitivity " + format3(e.metrics.sensitivity));
  return e;
}

ComparisonTable report_runs(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  std::vector<ReportRow> rows;
  for (const auto& d : run_dirs) {
    const fs::path row = d / run_files::kReport / "row.json";
    if (!fs::is_regular_file(row)) throw DataError(d.string() + " has no report; run or evaluate it first");
    rows.push_back(row_from_json(json::parse(read_text(row))));
  }
  if (rows.empty()) throw ConfigError("report needs at least one completed run");
  auto table = build_table(std::move(rows));
  write_text(out_dir / "table.csv", table_csv(table));
  write_text(out_dir / "table.md", table_markdown(table));
  return table;
}

}  // namespace histo::nn
