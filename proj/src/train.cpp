#include "histo/nn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "histo/config.hpp"
#include "histo/error.hpp"
#include "histo/nn/losses.hpp"
#include "histo/sampling.hpp"
#include "histo/schedule.hpp"
#include "json.hpp"

namespace histo::nn {

namespace fs = std::filesystem;
using json = nlohmann::json;

void configure_runtime(const TrainConfig& config) {
  torch::set_num_threads(config.threads);
  at::globalContext().setDeterministicAlgorithms(config.deterministic, /*warn_only=*/true);
}

torch::Tensor to_input_tensor(const std::vector<ImageBuffer>& images) {
  if (images.empty()) throw std::invalid_argument("to_input_tensor: empty batch");
  const int h = images[0].height(), w = images[0].width();
  auto out = torch::empty({static_cast<int64_t>(images.size()), h, w, 3}, torch::kUInt8);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w) {
      throw DataError("batch images differ in size: " + to_string(Dims{h, w}) + " vs " +
                      to_string(Dims{images[i].height(), images[i].width()}));
    }
    std::memcpy(out[static_cast<int64_t>(i)].data_ptr<uint8_t>(), images[i].data().data(), images[i].data().size());
  }
  static const auto mean = torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1});
  static const auto stddev = torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1});
  return ((out.permute({0, 3, 1, 2}).to(torch::kFloat) / 255.0f) - mean) / stddev;
}

torch::Tensor soft_label_tensor(const std::vector<SoftLabel>& labels) {
  const int64_t k = labels.empty() ? 0 : static_cast<int64_t>(labels[0].weights.size());
  auto t = torch::empty({static_cast<int64_t>(labels.size()), k}, torch::kFloat);
  auto acc = t.accessor<float, 2>();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int64_t c = 0; c < k; ++c) acc[i][c] = static_cast<float>(labels[i].weights[c]);
  }
  return t;
}

torch::Tensor apply_mix(const torch::Tensor& images, const MixPlan& plan) {
  if (plan.kind == MixKind::none) return images;
  std::vector<int64_t> idx(plan.partner.begin(), plan.partner.end());
  const auto partner = images.index_select(0, torch::tensor(idx, torch::kLong));
  if (plan.kind == MixKind::mixup) return plan.lambda * images + (1.0 - plan.lambda) * partner;
  auto out = images.clone();
  const auto& r = plan.rect;
  using torch::indexing::Slice;
  out.index_put_({Slice(), Slice(), Slice(r.y, r.y + r.h), Slice(r.x, r.x + r.w)},
                 partner.index({Slice(), Slice(), Slice(r.y, r.y + r.h), Slice(r.x, r.x + r.w)}));
  return out;
}

Predictions predict(HistoNet& model, const DatasetManifest& manifest, Split split, ImageSource& images,
                    int batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = model->is_training();
  model->eval();
  Predictions p;
  const auto idx = manifest.indices(split);
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<ImageBuffer> batch;
    for (std::size_t k = start; k < end; ++k) batch.push_back(images.get(idx[k]));
    const auto pred = model->forward(to_input_tensor(batch)).argmax(1);
    for (std::size_t k = start; k < end; ++k) {
      p.records.push_back(idx[k]);
      p.truth.push_back(static_cast<int>(index_of(manifest.records()[idx[k]].label)));
      p.predicted.push_back(static_cast<int>(pred[static_cast<int64_t>(k - start)].item<int64_t>()));
    }
  }
  model->train(was_training);
  return p;
}

ConfusionMatrix confusion_of(const Predictions& p, std::size_t num_classes) {
  return confusion(p.truth, p.predicted, num_classes);
}

void save_checkpoint(HistoNet& model, const CheckpointMeta& meta, const fs::path& path) {
  json j = {{"model", json::parse(model_config_to_json(meta.model))},
            {"epoch", meta.epoch},
            {"val_weighted_f1", meta.val_weighted_f1}};
  if (!meta.extra.empty()) j["extra"] = json::parse(meta.extra);
  torch::serialize::OutputArchive archive;
  model->save(archive);
  archive.write("histo_meta", c10::IValue(j.dump()));
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw TrainingError("cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw TrainingError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DataError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  c10::IValue meta_value;
  if (!archive.try_read("histo_meta", meta_value) || !meta_value.isString()) {
    throw DataError("checkpoint " + path.string() + " has no metadata");
  }
  const json j = json::parse(meta_value.toStringRef());
  LoadedCheckpoint out;
  out.meta.model = parse_model_config(j.at("model").dump(), path.string());
  out.meta.epoch = j.value("epoch", 0);
  out.meta.val_weighted_f1 = j.value("val_weighted_f1", 0.0);
  if (j.contains("extra")) out.meta.extra = j.at("extra").dump();
  ModelConfig cfg = out.meta.model;
  cfg.pretrained = false;  // weights come from the checkpoint
  out.model = build_model(cfg);
  out.model->load(archive);
  out.model->config = out.meta.model;
  return out;
}

namespace {

void check_labels(const DatasetManifest& m, int num_classes) {
  for (const auto& r : m.records()) {
    if (static_cast<int>(index_of(r.label)) >= num_classes) {
      throw ConfigError("record " + r.id + " has class " + std::string(code_name(r.label)) +
                        " outside model.num_classes = " + std::to_string(num_classes));
    }
  }
}

std::string batch_diagnostics(int epoch, std::size_t batch, const IndexBatch& idx, const DatasetManifest& m) {
  std::ostringstream out;
  out << "epoch " << epoch << ", batch " << batch << ", samples:";
  for (std::size_t i = 0; i < std::min<std::size_t>(idx.size(), 8); ++i) out << ' ' << m.records()[idx[i]].id;
  if (idx.size() > 8) out << " ...";
  return out.str();
}

}  // namespace

RunResult train(const ModelConfig& model_config, const TrainConfig& cfg, const DatasetManifest& manifest,
                ImageSource& images, const TrainOutputs& outputs) {
  model_config.validate();
  cfg.validate();
  check_labels(manifest, model_config.num_classes);
  if (manifest.split_size(Split::train) == 0) throw DataError("train split is empty");
  if (manifest.split_size(Split::val) == 0) throw DataError("val split is empty");
  configure_runtime(cfg);

  auto model = build_model(model_config);
  torch::manual_seed(cfg.seed);

  BatchPlan plan = cfg.sampler;
  plan.seed = cfg.seed;
  auto sampler = make_sampler(manifest, plan);
  const auto batches = static_cast<std::int64_t>(sampler->batches_per_epoch());
  const std::int64_t total_steps = std::max<std::int64_t>(1, batches * cfg.epochs);

  torch::optim::AdamW optimizer(model->parameters(),
                                torch::optim::AdamWOptions(cfg.base_lr).weight_decay(cfg.weight_decay));
  auto set_lr = [&](double lr) {
    for (auto& group : optimizer.param_groups()) static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
  };

  RunResult result;
  result.best_checkpoint = outputs.checkpoint_dir / "best.pt";
  result.last_checkpoint = outputs.checkpoint_dir / "last.pt";
  std::ofstream log;
  if (!outputs.metrics_log.empty()) {
    log.open(outputs.metrics_log, std::ios::app);
    if (!log) throw TrainingError("cannot open metrics log " + outputs.metrics_log.string());
  }

  CheckpointMeta meta{model_config, 0, 0.0, {}};
  if (cfg.epochs == 0) {
    save_checkpoint(model, meta, result.best_checkpoint);
    save_checkpoint(model, meta, result.last_checkpoint);
    return result;
  }

  const auto k = static_cast<std::size_t>(model_config.num_classes);
  double best_f1 = -1.0;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    model->train();
    Rng rng = worker_rng(cfg.seed, 0, static_cast<std::uint64_t>(epoch - 1));
    double loss_sum = 0.0;
    std::int64_t loss_steps = 0;
    for (std::int64_t b = 0; b < batches; ++b) {
      const IndexBatch idx = sampler->next_batch();
      ++step;
      // Batch norm cannot train on a single sample; only the shuffle sampler leaves one behind.
      if (idx.size() < 2) continue;
      std::vector<ImageBuffer> batch;
      std::vector<SoftLabel> labels;
      for (auto i : idx) {
        batch.push_back(apply_spatial(images.get(i), cfg.augment, rng));
        labels.push_back(SoftLabel::one_hot(index_of(manifest.records()[i].label), k));
      }
      const MixPlan mix = plan_batch_mix(batch.size(), {batch[0].height(), batch[0].width()}, cfg.augment, rng);
      const auto x = apply_mix(to_input_tensor(batch), mix);
      const auto y = soft_label_tensor(mix_labels(labels, mix));
      double value = 0.0;
      try {
        const auto loss = compute_loss(model->forward(x), y, cfg.loss);
        value = loss.item<double>();
        if (!std::isfinite(value)) {
          throw TrainingError("loss became non-finite (" + std::to_string(value) + ")");
        }
        optimizer.zero_grad();
        loss.backward();
        optimizer.step();
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at " + batch_diagnostics(epoch, b, idx, manifest) +
                            "; try a lower base_lr");
      } catch (const c10::Error& e) {
        throw TrainingError(std::string(e.what_without_backtrace()) + " at " +
                            batch_diagnostics(epoch, b, idx, manifest));
      } catch (const ConfigError&) {
        throw;
      } catch (const DataError&) {
        throw;
      } catch (const std::runtime_error& e) {
        // libtorch reports scalar overflow this way, e.g. from a runaway step size.
        throw TrainingError(std::string(e.what()) + " at " + batch_diagnostics(epoch, b, idx, manifest));
      }
      set_lr(cosine_lr(std::min(step, total_steps), total_steps, cfg.base_lr, cfg.eta_min));
      loss_sum += value;
      ++loss_steps;
    }

    const auto p = predict(model, manifest, Split::val, images, cfg.eval_batch_size);
    const auto metrics = compute_metrics(confusion_of(p, k));
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_steps ? loss_sum / static_cast<double>(loss_steps) : 0.0;
    rec.lr = cosine_lr(std::min(step, total_steps), total_steps, cfg.base_lr, cfg.eta_min);
    rec.steps = loss_steps;
    rec.val_accuracy = metrics.accuracy;
    rec.val_weighted_f1 = metrics.weighted_f1;
    rec.val_sensitivity = metrics.sensitivity;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);

    if (rec.val_weighted_f1 > best_f1) {
      best_f1 = rec.val_weighted_f1;
      result.best_epoch = epoch;
      result.best_val_weighted_f1 = best_f1;
      meta.epoch = epoch;
      meta.val_weighted_f1 = best_f1;
      save_checkpoint(model, meta, result.best_checkpoint);
    }
    if (log) {
      json line = {{"epoch", rec.epoch},
                   {"train_loss", rec.train_loss},
                   {"lr", rec.lr},
                   {"steps", rec.steps},
                   {"val_accuracy", rec.val_accuracy},
                   {"val_weighted_f1", rec.val_weighted_f1},
                   {"val_sensitivity", rec.val_sensitivity},
                   {"seconds", rec.seconds}};
      log << line.dump() << '\n' << std::flush;
    }
    if (outputs.on_epoch) outputs.on_epoch(rec);
    if (outputs.stop_after_epochs > 0 && epoch >= outputs.stop_after_epochs) break;
  }
  meta.epoch = result.history.back().epoch;
  meta.val_weighted_f1 = result.history.back().val_weighted_f1;
  save_checkpoint(model, meta, result.last_checkpoint);
  return result;
}

}  // namespace histo::nn
