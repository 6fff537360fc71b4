#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "histo/error.hpp"
#include "histo/nn/model.hpp"

namespace histo::nn {

namespace fs = std::filesystem;

HistoNetImpl::HistoNetImpl(const ModelConfig& cfg) : config(cfg) {
  config.validate();
  backbone.name = cfg.backbone;
  backbone.pretrained = cfg.pretrained;
  backbone.module = register_module("backbone", make_backbone_module(cfg.backbone));
  if (cfg.pretrained && cfg.backbone != BackboneName::linear_probe) {
    load_pretrained(*backbone.module, pretrained_weights_path(cfg));
  }
  const auto channels = backbone.module->stage_channels();
  backbone.pooled_dim = channels[3];
  if (cfg.head == HeadType::attention) {
    attention_head = register_module("head", AttentionHead(channels[3], cfg.num_classes, cfg.dropout));
  } else {
    pyramid_head = register_module("head", PyramidHead(channels, cfg.pyramid_width, cfg.num_classes, cfg.dropout));
  }
}

torch::Tensor HistoNetImpl::forward(const torch::Tensor& x) {
  auto stages = backbone.module->forward_stages(x);
  if (attention_head) return attention_head->forward(stages[3]);
  return pyramid_head->forward({stages.begin(), stages.end()});
}

torch::Tensor HistoNetImpl::forward_with_attention(const torch::Tensor& x, std::vector<torch::Tensor>& attention) {
  auto stages = backbone.module->forward_stages(x);
  attention.clear();
  if (attention_head) {
    torch::Tensor w;
    auto logits = attention_head->forward(stages[3], &w);
    attention.push_back(w);
    return logits;
  }
  return pyramid_head->forward({stages.begin(), stages.end()}, &attention);
}

HistoNet build_model(const ModelConfig& config) {
  torch::manual_seed(config.init_seed);
  return HistoNet(config);
}

double parameter_checksum(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  double digest = 0.0;
  double k = 1.0;
  auto mix = [&](const torch::Tensor& t) {
    const auto d = t.to(torch::kDouble);
    digest += k * (d.sum().item<double>() + 0.5 * d.abs().sum().item<double>());
    k += 1.0;
  };
  for (const auto& p : module.named_parameters()) mix(p.value());
  for (const auto& b : module.named_buffers()) mix(b.value());
  return digest;
}

int64_t parameter_count(torch::nn::Module& module, bool trainable_only) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (!trainable_only || p.requires_grad()) n += p.numel();
  }
  return n;
}

std::string pretrained_weights_path(const ModelConfig& config) {
  const std::string name(backbone_name(config.backbone));
  const std::string hint = " (set HISTO_WEIGHTS_DIR to a directory holding " + name +
                           ".pt, produced by tools/export_weights.py, or set model.pretrained to false)";
  fs::path path;
  if (!config.weights_path.empty()) {
    path = config.weights_path;
  } else if (const char* dir = std::getenv("HISTO_WEIGHTS_DIR"); dir && *dir) {
    path = fs::path(dir) / (name + ".pt");
  } else {
    throw ConfigError("pretrained weights for " + name + " requested but no weights location is configured" + hint);
  }
  if (!fs::is_regular_file(path)) {
    throw ConfigError("pretrained weights for " + name + " not found at " + path.string() + hint);
  }
  return path.string();
}

namespace {

std::map<std::string, torch::Tensor> read_state_dict(const std::string& path) {
  std::map<std::string, torch::Tensor> out;
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    const auto value = torch::pickle_load(bytes);
    if (value.isGenericDict()) {
      for (const auto& kv : value.toGenericDict()) {
        if (kv.key().isString() && kv.value().isTensor()) out[kv.key().toStringRef()] = kv.value().toTensor();
      }
      return out;
    }
  } catch (const c10::Error&) {
    // Not a pickled dict; fall through to the archive format.
  }
  return out;
}

// Module::save nests one archive per submodule, so "a.b.w" lives at a/b/w.
bool read_nested(torch::serialize::InputArchive& archive, const std::string& name, torch::Tensor& out) {
  if (archive.try_read(name, out)) return true;
  const auto dot = name.find('.');
  if (dot == std::string::npos) return false;
  torch::serialize::InputArchive child;
  if (!archive.try_read(name.substr(0, dot), child)) return false;
  return read_nested(child, name.substr(dot + 1), out);
}

}  // namespace

void load_pretrained(Backbone& backbone, const std::string& path) {
  torch::NoGradGuard no_grad;
  auto dict = read_state_dict(path);
  std::optional<torch::serialize::InputArchive> archive;
  if (dict.empty()) {
    archive.emplace();
    try {
      archive->load_from(path);
    } catch (const c10::Error& e) {
      throw ConfigError("cannot read pretrained weights " + path + ": not a state dict or torch archive");
    }
  }
  auto lookup = [&](const std::string& name, torch::Tensor& out) {
    if (!archive) {
      for (const std::string key : {name, "backbone." + name}) {
        if (auto it = dict.find(key); it != dict.end()) {
          out = it->second;
          return true;
        }
      }
      return false;
    }
    return read_nested(*archive, name, out) || read_nested(*archive, "backbone." + name, out);
  };
  std::vector<std::string> missing;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    torch::Tensor src;
    if (!lookup(name, src)) {
      missing.push_back(name);
      return;
    }
    if (src.sizes() != target.sizes()) {
      std::ostringstream msg;
      msg << "pretrained weights " << path << ": shape mismatch for " << name << ": file " << src.sizes()
          << " vs model " << target.sizes();
      throw ConfigError(msg.str());
    }
    target.copy_(src.to(target.dtype()));
  };
  for (auto& p : backbone.named_parameters()) assign(p.key(), p.value());
  for (auto& b : backbone.named_buffers()) assign(b.key(), b.value());
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) list += (i ? ", " : "") + missing[i];
    throw ConfigError("pretrained weights " + path + " lack " + std::to_string(missing.size()) +
                      " backbone tensors (first: " + list + ")");
  }
}

std::string describe(const ModelConfig& config) {
  auto model = build_model(config);
  const auto shapes = probe_stage_shapes(*model->backbone.module, config.input_dims);
  std::ostringstream out;
  out << "backbone      " << backbone_display_name(config.backbone) << (config.pretrained ? " (pretrained)" : "")
      << '\n'
      << "head          " << head_name(config.head) << ", dropout " << config.dropout << '\n'
      << "input         " << to_string(config.input_dims) << '\n'
      << "classes       " << config.num_classes << '\n'
      << "parameters    " << parameter_count(*model) << " total, " << parameter_count(*model->backbone.module)
      << " backbone\n"
      << "pooled dim    " << model->backbone.pooled_dim << '\n';
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    out << "stage " << i + 1 << "       (" << shapes[i].channels << ", " << shapes[i].height << ", "
        << shapes[i].width << ")\n";
  }
  if (config.head == HeadType::pyramid) out << "fused dim     " << 4 * config.pyramid_width << '\n';
  return out.str();
}

}  // namespace histo::nn
