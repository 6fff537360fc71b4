#include "histo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace histo {

// ---------------------------------------------------------------------------
// enum names

std::string_view backbone_name(BackboneName b) {
  switch (b) {
    case BackboneName::xception:
      return "xception";
    case BackboneName::efficientnet:
      return "efficientnet";
    case BackboneName::resnet50:
      return "resnet50";
    case BackboneName::convnexttiny_v2:
      return "convnexttiny_v2";
    case BackboneName::inception_resnet:
      return "inception_resnet";
    case BackboneName::linear_probe:
      return "linear_probe";
  }
  return "";
}

BackboneName parse_backbone(std::string_view text) {
  for (auto b : {BackboneName::xception, BackboneName::efficientnet, BackboneName::resnet50,
                 BackboneName::convnexttiny_v2, BackboneName::inception_resnet, BackboneName::linear_probe}) {
    if (backbone_name(b) == text) return b;
  }
  throw ConfigError("unknown backbone '" + std::string(text) +
                    "'; valid: xception, efficientnet, resnet50, convnexttiny_v2, inception_resnet "
                    "(linear_probe for tests)");
}

std::string_view backbone_display_name(BackboneName b) {
  switch (b) {
    case BackboneName::xception:
      return "Xception";
    case BackboneName::efficientnet:
      return "EfficientNet";
    case BackboneName::resnet50:
      return "ResNet50";
    case BackboneName::convnexttiny_v2:
      return "ConvNextTiny V2";
    case BackboneName::inception_resnet:
      return "InceptionResNet";
    case BackboneName::linear_probe:
      return "LinearProbe";
  }
  return "";
}

std::string_view head_name(HeadType h) { return h == HeadType::attention ? "attention" : "pyramid"; }

HeadType parse_head(std::string_view text) {
  if (text == "attention") return HeadType::attention;
  if (text == "pyramid") return HeadType::pyramid;
  throw ConfigError("unknown head '" + std::string(text) + "' (expected attention or pyramid)");
}

std::string_view loss_name(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::label_smoothing_ce:
      return "label_smoothing_ce";
    case LossKind::focal:
      return "focal";
  }
  return "";
}

LossKind parse_loss(std::string_view text) {
  if (text == "cross_entropy") return LossKind::cross_entropy;
  if (text == "label_smoothing_ce") return LossKind::label_smoothing_ce;
  if (text == "focal") return LossKind::focal;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected cross_entropy, label_smoothing_ce or focal)");
}

std::string_view loss_display_name(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy:
      return "CrossEntropy";
    case LossKind::label_smoothing_ce:
      return "LabelSmoothing";
    case LossKind::focal:
      return "Focal Loss";
  }
  return "";
}

// ---------------------------------------------------------------------------
// validation

void ModelConfig::validate() const {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0,1)");
  if (num_classes < 2 || num_classes > static_cast<int>(kNumClassCodes)) {
    throw ConfigError("model.num_classes must be between 2 and 7");
  }
  if (input_dims.height < 1 || input_dims.width < 1) throw ConfigError("model input dims must be positive");
  if (pyramid_width < 1) throw ConfigError("model.pyramid_width must be positive");
}

void LossSpec::validate() const {
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ConfigError("train.loss.smoothing must lie in [0,1)");
  if (!(gamma >= 0.0)) throw ConfigError("train.loss.gamma must be nonnegative");
}

void TrainConfig::validate() const {
  loss.validate();
  augment.validate();
  if (!(base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
  if (!(eta_min >= 0.0 && eta_min <= base_lr)) throw ConfigError("train.eta_min must lie in [0, base_lr]");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be nonnegative");
  if (epochs < 0) throw ConfigError("train.epochs must be nonnegative");
  if (sampler.batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (eval_batch_size < 1) throw ConfigError("train.eval_batch_size must be positive");
  if (threads < 1) throw ConfigError("train.threads must be positive");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name must not be empty");
  if (tiling && preprocess.target_dims) {
    throw ConfigError("tiling and preprocess.target_dims are mutually exclusive");
  }
  if (!tiling && !preprocess.target_dims) throw ConfigError("preprocess.target_dims is required without tiling");
  if (preprocess.target_dims && (preprocess.target_dims->height < 1 || preprocess.target_dims->width < 1)) {
    throw ConfigError("preprocess.target_dims must be positive");
  }
  if (tiling) {
    if (tiling->n_tiles < 1) throw ConfigError("tiling.n_tiles must be at least 1");
    if (tiling->zoom_levels < 1) throw ConfigError("tiling.zoom_levels must be at least 1");
    if (tiling->window_sizes.empty()) throw ConfigError("tiling.window_sizes must not be empty");
  }
  if (dataset.root.empty()) {
    throw ConfigError("dataset.root is empty (set it in the config or pass --data-root)");
  }
  if (dataset.upsample_target && *dataset.upsample_target < 1) {
    throw ConfigError("dataset.upsample_target must be positive");
  }
  if (dataset.split_mode == SplitMode::custom) {
    double s = dataset.split_probs[0] + dataset.split_probs[1] + dataset.split_probs[2];
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("dataset.split.probs must sum to 1");
  }
  ModelConfig m = model;
  m.input_dims = model_input_dims();
  m.validate();
  train.validate();
}

Dims ExperimentConfig::model_input_dims() const {
  if (tiling) return tiling->canvas_dims;
  return preprocess.target_dims.value_or(model.input_dims);
}

// ---------------------------------------------------------------------------
// strict JSON reading

namespace {

class Section {
 public:
  Section(const json& j, std::string path, const std::string& source)
      : j_(j), path_(std::move(path)), source_(source) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": " + qualified(key) + ": " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void touch(const std::string& key) { used_.insert(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return as<T>(key, j_.at(key));
  }

  template <typename T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail(key, "required field is missing");
    return as<T>(key, j_.at(key));
  }

  Dims dims(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
      fail(key, "expected [height, width]");
    }
    return {v[0].get<int>(), v[1].get<int>()};
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), qualified(key), source_);
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) fail(it.key(), "unknown key");
    }
  }

 private:
  std::string qualified(const std::string& key) const {
    if (path_.empty()) return key.empty() ? "<root>" : key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  template <typename T>
  T as(const std::string& key, const json& v) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
          fail(key, "expected a nonnegative integer");
        }
      }
    }
    return v.get<T>();
  }

  const json& j_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

template <typename Enum, typename Parse>
Enum parse_enum(Section& s, const std::string& key, Enum fallback, Parse parse) {
  if (!s.has(key)) {
    s.touch(key);
    return fallback;
  }
  auto text = s.get<std::string>(key, "");
  try {
    return parse(text);
  } catch (const ConfigError& e) {
    s.fail(key, e.what());
  }
}

DatasetConfig read_dataset(Section s) {
  DatasetConfig d;
  d.root = s.get<std::string>("root", "");
  d.layout = parse_enum(s, "layout", ManifestLayout::bracs_folders, parse_layout);
  d.csv = s.get<std::string>("csv", "");
  if (s.has("split")) {
    Section sp = s.child("split");
    auto mode = sp.get<std::string>("mode", "bracs_default");
    if (mode == "bracs_default") {
      d.split_mode = SplitMode::bracs_default;
    } else if (mode == "custom") {
      d.split_mode = SplitMode::custom;
    } else {
      sp.fail("mode", "expected bracs_default or custom");
    }
    if (sp.has("probs")) {
      const json& p = sp.raw("probs");
      if (!p.is_array() || p.size() != 3) sp.fail("probs", "expected [train, val, test]");
      for (int i = 0; i < 3; ++i) {
        if (!p[i].is_number()) sp.fail("probs", "expected numbers");
        d.split_probs[i] = p[i].get<double>();
      }
    }
    d.split_seed = sp.get<std::uint64_t>("seed", d.split_seed);
    sp.finish();
  } else {
    s.touch("split");
  }
  if (s.has("upsample_target")) d.upsample_target = s.get<std::int64_t>("upsample_target", 0);
  else s.touch("upsample_target");
  d.upsample_seed = s.get<std::uint64_t>("upsample_seed", d.upsample_seed);
  if (s.has("synthetic")) {
    Section sy = s.child("synthetic");
    SynthSpec spec;
    spec.classes = sy.get<int>("classes", spec.classes);
    spec.per_class = sy.get<int>("per_class", spec.per_class);
    if (sy.has("dims")) spec.dims = sy.dims("dims");
    spec.seed = sy.get<std::uint64_t>("seed", spec.seed);
    spec.train_fraction = sy.get<double>("train_fraction", spec.train_fraction);
    spec.val_fraction = sy.get<double>("val_fraction", spec.val_fraction);
    sy.finish();
    d.synthetic = spec;
  } else {
    s.touch("synthetic");
  }
  s.finish();
  return d;
}

PreprocessConfig read_preprocess(Section s) {
  PreprocessConfig p;
  if (s.has("target_dims")) p.target_dims = s.dims("target_dims");
  else s.touch("target_dims");
  p.gray_noise = s.get<bool>("gray_noise", p.gray_noise);
  p.luminance_threshold = s.get<double>("luminance_threshold", p.luminance_threshold);
  auto stain = s.get<std::string>("stain_norm", "none");
  if (stain == "none") {
    p.stain = StainMethod::none;
  } else if (stain == "reference_based") {
    p.stain = StainMethod::reference_based;
  } else {
    s.fail("stain_norm", "expected none or reference_based");
  }
  p.stain_reference = s.get<std::string>("stain_reference", "");
  if (!(p.luminance_threshold >= 0.0 && p.luminance_threshold <= 255.0)) {
    s.fail("luminance_threshold", "must lie in [0,255]");
  }
  s.finish();
  return p;
}

TileSpec read_tiling(Section s) {
  TileSpec t;
  if (s.has("window_sizes")) {
    const json& w = s.raw("window_sizes");
    if (!w.is_array() || w.empty()) s.fail("window_sizes", "expected a non-empty array of integers");
    t.window_sizes.clear();
    for (const auto& v : w) {
      if (!v.is_number_integer()) s.fail("window_sizes", "expected integers");
      t.window_sizes.push_back(v.get<int>());
    }
  }
  t.zoom_levels = s.get<int>("zoom_levels", t.zoom_levels);
  t.n_tiles = s.get<int>("n_tiles", t.n_tiles);
  if (s.has("canvas_dims")) t.canvas_dims = s.dims("canvas_dims");
  t.selection_seed = s.get<std::uint64_t>("selection_seed", t.selection_seed);
  t.background_threshold = s.get<double>("background_threshold", t.background_threshold);
  t.max_attempts = s.get<int>("max_attempts", t.max_attempts);
  s.finish();
  return t;
}

ModelConfig read_model(Section s) {
  ModelConfig m;
  m.backbone = parse_enum(s, "backbone", m.backbone, parse_backbone);
  m.head = parse_enum(s, "head", m.head, parse_head);
  m.dropout = s.get<double>("dropout", m.dropout);
  m.num_classes = s.get<int>("num_classes", m.num_classes);
  m.pretrained = s.get<bool>("pretrained", m.pretrained);
  m.weights_path = s.get<std::string>("weights_path", m.weights_path);
  m.pyramid_width = s.get<int>("pyramid_width", m.pyramid_width);
  m.init_seed = s.get<std::uint64_t>("init_seed", m.init_seed);
  s.finish();
  return m;
}

AugmentSpec read_augment(Section s) {
  AugmentSpec a;
  a.rotation90 = s.get<bool>("rotation90", a.rotation90);
  a.hflip_prob = s.get<double>("hflip_prob", a.hflip_prob);
  a.vflip_prob = s.get<double>("vflip_prob", a.vflip_prob);
  a.shift_fraction = s.get<double>("shift_fraction", a.shift_fraction);
  a.zoom_range = s.get<double>("zoom_range", a.zoom_range);
  a.brightness_delta = s.get<double>("brightness_delta", a.brightness_delta);
  a.blur_sharpen = s.get<bool>("blur_sharpen", a.blur_sharpen);
  a.cutmix_prob = s.get<double>("cutmix_prob", a.cutmix_prob);
  a.cutmix_alpha = s.get<double>("cutmix_alpha", a.cutmix_alpha);
  a.mixup_prob = s.get<double>("mixup_prob", a.mixup_prob);
  a.mixup_alpha = s.get<double>("mixup_alpha", a.mixup_alpha);
  s.finish();
  return a;
}

TrainConfig read_train(Section s) {
  TrainConfig t;
  if (s.has("loss")) {
    Section l = s.child("loss");
    t.loss.kind = parse_enum(l, "kind", t.loss.kind, parse_loss);
    t.loss.smoothing = l.get<double>("smoothing", t.loss.smoothing);
    t.loss.gamma = l.get<double>("gamma", t.loss.gamma);
    l.finish();
  } else {
    s.touch("loss");
  }
  t.base_lr = s.get<double>("base_lr", t.base_lr);
  t.eta_min = s.get<double>("eta_min", t.eta_min);
  t.weight_decay = s.get<double>("weight_decay", t.weight_decay);
  t.epochs = s.get<int>("epochs", t.epochs);
  t.sampler.batch_size = s.get<std::size_t>("batch_size", t.sampler.batch_size);
  t.eval_batch_size = s.get<int>("eval_batch_size", t.eval_batch_size);
  t.sampler.strategy = parse_enum(s, "sampler", t.sampler.strategy, parse_strategy);
  t.seed = s.get<std::uint64_t>("seed", t.seed);
  t.sampler.seed = t.seed;
  t.threads = s.get<int>("threads", t.threads);
  t.deterministic = s.get<bool>("deterministic", t.deterministic);
  if (s.has("augment")) t.augment = read_augment(s.child("augment"));
  else s.touch("augment");
  s.finish();
  return t;
}

json dims_json(Dims d) { return json::array({d.height, d.width}); }

json model_json(const ModelConfig& m) {
  json j = {{"backbone", std::string(backbone_name(m.backbone))},
            {"head", std::string(head_name(m.head))},
            {"dropout", m.dropout},
            {"num_classes", m.num_classes},
            {"pretrained", m.pretrained},
            {"pyramid_width", m.pyramid_width},
            {"init_seed", m.init_seed}};
  if (!m.weights_path.empty()) j["weights_path"] = m.weights_path;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  Section s(root, "", source);
  for (const char* required : {"dataset", "model", "train"}) {
    if (!s.has(required)) throw ConfigError(source + ": missing required section '" + std::string(required) + "'");
  }
  ExperimentConfig c;
  c.name = s.get<std::string>("name", c.name);
  c.dataset = read_dataset(s.child("dataset"));
  if (s.has("preprocess")) c.preprocess = read_preprocess(s.child("preprocess"));
  else s.touch("preprocess");
  if (s.has("tiling")) c.tiling = read_tiling(s.child("tiling"));
  else s.touch("tiling");
  c.model = read_model(s.child("model"));
  c.train = read_train(s.child("train"));
  if (s.has("output")) {
    Section o = s.child("output");
    c.run_dir = o.get<std::string>("run_dir", "");
    o.finish();
  } else {
    s.touch("output");
  }
  s.finish();
  c.model.input_dims = c.model_input_dims();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  json d;
  d["root"] = c.dataset.root.string();
  d["layout"] = std::string(layout_name(c.dataset.layout));
  if (!c.dataset.csv.empty()) d["csv"] = c.dataset.csv.string();
  d["split"] = {{"mode", c.dataset.split_mode == SplitMode::custom ? "custom" : "bracs_default"},
                {"probs", c.dataset.split_probs},
                {"seed", c.dataset.split_seed}};
  if (c.dataset.upsample_target) d["upsample_target"] = *c.dataset.upsample_target;
  d["upsample_seed"] = c.dataset.upsample_seed;
  if (c.dataset.synthetic) {
    const auto& sy = *c.dataset.synthetic;
    d["synthetic"] = {{"classes", sy.classes},         {"per_class", sy.per_class},
                      {"dims", dims_json(sy.dims)},     {"seed", sy.seed},
                      {"train_fraction", sy.train_fraction}, {"val_fraction", sy.val_fraction}};
  }
  j["dataset"] = d;

  json p;
  if (c.preprocess.target_dims) p["target_dims"] = dims_json(*c.preprocess.target_dims);
  p["gray_noise"] = c.preprocess.gray_noise;
  p["luminance_threshold"] = c.preprocess.luminance_threshold;
  p["stain_norm"] = c.preprocess.stain == StainMethod::none ? "none" : "reference_based";
  if (!c.preprocess.stain_reference.empty()) p["stain_reference"] = c.preprocess.stain_reference.string();
  j["preprocess"] = p;

  if (c.tiling) {
    const auto& t = *c.tiling;
    j["tiling"] = {{"window_sizes", t.window_sizes},
                   {"zoom_levels", t.zoom_levels},
                   {"n_tiles", t.n_tiles},
                   {"canvas_dims", dims_json(t.canvas_dims)},
                   {"selection_seed", t.selection_seed},
                   {"background_threshold", t.background_threshold},
                   {"max_attempts", t.max_attempts}};
  }

  j["model"] = model_json(c.model);

  const auto& t = c.train;
  const auto& a = t.augment;
  j["train"] = {{"loss", {{"kind", std::string(loss_name(t.loss.kind))},
                          {"smoothing", t.loss.smoothing},
                          {"gamma", t.loss.gamma}}},
                {"base_lr", t.base_lr},
                {"eta_min", t.eta_min},
                {"weight_decay", t.weight_decay},
                {"epochs", t.epochs},
                {"batch_size", t.sampler.batch_size},
                {"eval_batch_size", t.eval_batch_size},
                {"sampler", std::string(strategy_name(t.sampler.strategy))},
                {"seed", t.seed},
                {"threads", t.threads},
                {"deterministic", t.deterministic},
                {"augment", {{"rotation90", a.rotation90},
                             {"hflip_prob", a.hflip_prob},
                             {"vflip_prob", a.vflip_prob},
                             {"shift_fraction", a.shift_fraction},
                             {"zoom_range", a.zoom_range},
                             {"brightness_delta", a.brightness_delta},
                             {"blur_sharpen", a.blur_sharpen},
                             {"cutmix_prob", a.cutmix_prob},
                             {"cutmix_alpha", a.cutmix_alpha},
                             {"mixup_prob", a.mixup_prob},
                             {"mixup_alpha", a.mixup_alpha}}}};
  if (!c.run_dir.empty()) j["output"] = {{"run_dir", c.run_dir.string()}};
  return j.dump(2) + "\n";
}

std::string model_config_to_json(const ModelConfig& m) {
  json j = model_json(m);
  j["input_dims"] = dims_json(m.input_dims);
  return j.dump();
}

ModelConfig parse_model_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  Section s(j, "model", source);
  Dims dims = s.has("input_dims") ? s.dims("input_dims") : ModelConfig{}.input_dims;
  json rest = j;
  rest.erase("input_dims");
  ModelConfig m = read_model(Section(rest, "model", source));
  m.input_dims = dims;
  return m;
}

// ---------------------------------------------------------------------------
// presets

namespace {

ExperimentConfig bracs_base(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.preprocess.target_dims = Dims{512, 512};
  c.model.backbone = BackboneName::resnet50;
  c.model.head = HeadType::attention;
  c.model.dropout = 0.45;
  c.model.pretrained = true;
  c.train.loss.kind = LossKind::focal;
  c.train.epochs = 30;
  c.train.sampler.batch_size = 28;
  c.train.sampler.strategy = SamplerStrategy::batch_balanced;
  c.model.input_dims = c.model_input_dims();
  return c;
}

void cutmix_mixup_label_smoothing(ExperimentConfig& c) {
  c.train.loss.kind = LossKind::label_smoothing_ce;
  c.train.loss.smoothing = 0.35;
  c.train.augment.cutmix_prob = 0.5;
  c.train.augment.mixup_prob = 0.5;
}

void tiling_1024(ExperimentConfig& c) {
  c.preprocess.target_dims.reset();
  TileSpec t;
  t.canvas_dims = {1024, 1024};
  c.tiling = t;
}

using PresetFn = std::function<ExperimentConfig()>;

const std::vector<std::pair<std::string, PresetFn>>& preset_table() {
  static const std::vector<std::pair<std::string, PresetFn>> table = [] {
    std::vector<std::pair<std::string, PresetFn>> t;
    auto add = [&t](std::string name, std::function<void(ExperimentConfig&)> edit) {
      t.emplace_back(name, [name, edit] {
        ExperimentConfig c = bracs_base(name);
        edit(c);
        c.model.input_dims = c.model_input_dims();
        return c;
      });
    };

    // Original split, low-resolution inputs (resize + background graying).
    add("table7_efficientnet_focal_1024x512_d035", [](auto& c) {
      c.model.backbone = BackboneName::efficientnet;
      c.preprocess.target_dims = Dims{1024, 512};
      c.model.dropout = 0.35;
    });
    add("table7_efficientnet_focal_512_d045", [](auto& c) { c.model.backbone = BackboneName::efficientnet; });
    add("table7_efficientnet_focal_512_d050", [](auto& c) {
      c.model.backbone = BackboneName::efficientnet;
      c.model.dropout = 0.5;
    });
    add("table7_resnet50_ce_512", [](auto& c) { c.train.loss.kind = LossKind::cross_entropy; });
    add("table7_resnet50_focal_512", [](auto&) {});
    add("table7_resnet50_cutmix_mixup_ls_512", cutmix_mixup_label_smoothing);
    add("table7_resnet50_stainnorm_ce_512", [](auto& c) {
      c.train.loss.kind = LossKind::cross_entropy;
      c.preprocess.stain = StainMethod::reference_based;
    });
    add("table7_resnet50_pyramid_cutmix_mixup_ls_512", [](auto& c) {
      c.model.head = HeadType::pyramid;
      cutmix_mixup_label_smoothing(c);
    });
    add("table7_resnet50_tiling_focal_1024", tiling_1024);
    add("table7_inceptionresnet_focal_512", [](auto& c) { c.model.backbone = BackboneName::inception_resnet; });

    // Original split, high-resolution inputs (no background graying).
    add("table4_resnet50_pyramid_cutmix_mixup_ls_512", [](auto& c) {
      c.preprocess.gray_noise = false;
      c.model.head = HeadType::pyramid;
      cutmix_mixup_label_smoothing(c);
    });
    add("table4_convnexttiny_v2_focal_512", [](auto& c) {
      c.preprocess.gray_noise = false;
      c.model.backbone = BackboneName::convnexttiny_v2;
    });
    add("table4_resnet50_focal_512", [](auto& c) { c.preprocess.gray_noise = false; });
    add("table4_resnet50_tiling_focal_1024", [](auto& c) {
      c.preprocess.gray_noise = false;
      tiling_1024(c);
    });

    // Custom 0.9/0.07/0.03 split with per-class upsampling of the train split.
    const std::pair<const char*, BackboneName> custom_models[] = {{"xception", BackboneName::xception},
                                                                  {"efficientnet", BackboneName::efficientnet},
                                                                  {"resnet50", BackboneName::resnet50},
                                                                  {"inceptionresnet", BackboneName::inception_resnet}};
    for (auto [table, target] : {std::pair{"table5", 1000}, std::pair{"table6", 2000}}) {
      for (auto [label, backbone] : custom_models) {
        add(std::string(table) + "_" + label + "_custom_up" + std::to_string(target),
            [backbone, target](auto& c) {
              c.model.backbone = backbone;
              c.dataset.split_mode = SplitMode::custom;
              c.dataset.split_probs = {0.9, 0.07, 0.03};
              c.dataset.upsample_target = target;
              c.train.sampler.strategy = SamplerStrategy::none;
            });
      }
    }

    t.emplace_back("synthetic_smoke", [] {
      ExperimentConfig c;
      c.name = "synthetic_smoke";
      c.dataset.root = "synthetic_smoke_data";
      c.dataset.synthetic = SynthSpec{};
      c.preprocess.target_dims = Dims{128, 128};
      c.model.backbone = BackboneName::resnet50;
      c.model.pretrained = false;
      c.model.dropout = 0.45;
      c.train.loss.kind = LossKind::focal;
      c.train.epochs = 5;
      c.train.sampler.batch_size = 28;
      c.train.sampler.strategy = SamplerStrategy::batch_balanced;
      c.model.input_dims = c.model_input_dims();
      return c;
    });
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [n, fn] : preset_table()) names.push_back(n);
  return names;
}

std::optional<ExperimentConfig> preset(const std::string& name) {
  for (const auto& [n, fn] : preset_table()) {
    if (n == name) return fn();
  }
  return std::nullopt;
}

ExperimentConfig resolve_config(const std::string& spec) {
  constexpr std::string_view kPrefix = "preset:";
  if (spec.rfind(kPrefix, 0) == 0) {
    auto name = spec.substr(kPrefix.size());
    auto c = preset(name);
    if (!c) throw ConfigError("unknown preset '" + name + "'");
    return *c;
  }
  return load_config(spec);
}

fs::path run_root() {
  if (const char* env = std::getenv("HISTO_RUN_ROOT"); env && *env) return fs::path(env);
  return fs::path("runs");
}

fs::path resolve_run_dir(const ExperimentConfig& config) {
  fs::path dir = config.run_dir.empty() ? run_root() / config.name
                 : config.run_dir.is_absolute() ? config.run_dir
                                                : run_root() / config.run_dir;
  return fs::absolute(dir);
}

}  // namespace histo
