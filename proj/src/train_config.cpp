#include "transfig/train_config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

using nlohmann::json;

const char* to_string(AblationVariant v) noexcept {
  switch (v) {
    case AblationVariant::baseline: return "baseline";
    case AblationVariant::d_shared1: return "d_shared1";
    case AblationVariant::no_pool: return "no_pool";
    case AblationVariant::no_stage1: return "no_stage1";
    case AblationVariant::no_stage2: return "no_stage2";
  }
  return "?";
}

AblationVariant parse_variant(const std::string& name) {
  for (auto v : {AblationVariant::baseline, AblationVariant::d_shared1, AblationVariant::no_pool,
                 AblationVariant::no_stage1, AblationVariant::no_stage2}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown ablation variant '" + name +
                    "' (expected baseline, d_shared1, no_pool, no_stage1 or no_stage2)");
}

const char* to_string(OptimizerKind k) noexcept { return k == OptimizerKind::adam ? "adam" : "rmsprop"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or rmsprop)");
}

namespace {

const char* to_string(DiscriminatorObjective o) { return o == DiscriminatorObjective::full ? "full" : "compact"; }

DiscriminatorObjective parse_objective(const std::string& s) {
  if (s == "full") return DiscriminatorObjective::full;
  if (s == "compact") return DiscriminatorObjective::compact;
  throw ConfigError("unknown discriminator objective '" + s + "' (expected full or compact)");
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

}  // namespace

std::int64_t TrainConfig::resolved_stage_switch() const {
  return stage_switch_epoch < 0 ? total_epochs / 2 : stage_switch_epoch;
}

AugmentConfig TrainConfig::augment() const {
  AugmentConfig a;
  a.crop_size = image_size;
  a.resize_factor = resize_factor;
  a.flip = flip;
  return a;
}

void TrainConfig::validate() const {
  if (total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
  const auto sw = resolved_stage_switch();
  if (sw < 0 || sw > total_epochs) throw ConfigError("stage_switch_epoch must lie in [0, total_epochs]");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (checkpoint_every_epochs < 1) throw ConfigError("checkpoint_every_epochs must be >= 1");
  if (sample_images < 0) throw ConfigError("sample_images must be >= 0");
  weights.validate();
  pool.validate();
  generator.validate();
  generator.validate_image_size(image_size);
  discriminator.validate();
  discriminator.validate_image_size(image_size);
  if (generator.out_channels != generator.in_channels || discriminator.image_channels != generator.in_channels) {
    throw ConfigError("generator and discriminator channel counts must agree");
  }
  augment().validate();
  try {
    torch::Device dev(device);
    if (dev.is_cuda() && !torch::cuda::is_available()) throw ConfigError("device '" + device + "' is unavailable");
  } catch (const c10::Error&) {
    throw ConfigError("invalid device '" + device + "'");
  }
}

json TrainConfig::to_json() const {
  json j;
  j["total_epochs"] = total_epochs;
  j["stage_switch_epoch"] = stage_switch_epoch;
  j["max_steps"] = max_steps;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["optimizer"] = to_string(optimizer);
  j["adam.beta1"] = adam_beta1;
  j["adam.beta2"] = adam_beta2;
  j["weights.lambda_adv"] = weights.lambda_adv;
  j["weights.lambda_rec"] = weights.lambda_rec;
  j["image_size"] = image_size;
  j["seed"] = seed;
  j["pool.capacity"] = pool.capacity;
  j["pool.p_generated"] = pool.p_generated;
  j["pool.mixing"] = to_string(pool.mixing);
  j["pool.storage"] = pool.storage;
  j["variant"] = to_string(variant);
  j["discriminator.objective"] = to_string(discriminator_objective);
  j["generator.arch"] = to_string(generator.arch);
  j["generator.base_filters"] = generator.base_filters;
  j["generator.n_resnet_blocks"] = generator.n_resnet_blocks;
  j["generator.n_unet_levels"] = generator.n_unet_levels;
  j["generator.use_dropout"] = generator.use_dropout;
  j["generator.channels"] = generator.in_channels;
  j["discriminator.base_filters"] = discriminator.base_filters;
  j["discriminator.n_layers"] = discriminator.n_layers;
  j["augment.resize_factor"] = resize_factor;
  j["augment.flip"] = flip;
  j["checkpoint_every_epochs"] = checkpoint_every_epochs;
  j["sample_images"] = sample_images;
  j["device"] = device;
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object with flat dotted keys");
  TrainConfig c = base;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"total_epochs", [&](const json& v, const std::string& k) { c.total_epochs = get_as<std::int64_t>(v, k); }},
      {"stage_switch_epoch", [&](const json& v, const std::string& k) { c.stage_switch_epoch = get_as<std::int64_t>(v, k); }},
      {"max_steps", [&](const json& v, const std::string& k) { c.max_steps = get_as<std::int64_t>(v, k); }},
      {"batch_size", [&](const json& v, const std::string& k) { c.batch_size = get_as<std::int64_t>(v, k); }},
      {"lr", [&](const json& v, const std::string& k) { c.lr = get_as<double>(v, k); }},
      {"optimizer", [&](const json& v, const std::string& k) { c.optimizer = parse_optimizer(get_as<std::string>(v, k)); }},
      {"adam.beta1", [&](const json& v, const std::string& k) { c.adam_beta1 = get_as<double>(v, k); }},
      {"adam.beta2", [&](const json& v, const std::string& k) { c.adam_beta2 = get_as<double>(v, k); }},
      {"weights.lambda_adv", [&](const json& v, const std::string& k) { c.weights.lambda_adv = get_as<double>(v, k); }},
      {"weights.lambda_rec", [&](const json& v, const std::string& k) { c.weights.lambda_rec = get_as<double>(v, k); }},
      {"image_size", [&](const json& v, const std::string& k) { c.image_size = get_as<std::int64_t>(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = get_as<std::uint64_t>(v, k); }},
      {"pool.capacity", [&](const json& v, const std::string& k) { c.pool.capacity = get_as<std::size_t>(v, k); }},
      {"pool.p_generated", [&](const json& v, const std::string& k) { c.pool.p_generated = get_as<double>(v, k); }},
      {"pool.mixing", [&](const json& v, const std::string& k) { c.pool.mixing = parse_pool_mixing(get_as<std::string>(v, k)); }},
      {"pool.storage", [&](const json& v, const std::string& k) { c.pool.storage = get_as<std::string>(v, k); }},
      {"variant", [&](const json& v, const std::string& k) { c.variant = parse_variant(get_as<std::string>(v, k)); }},
      {"discriminator.objective", [&](const json& v, const std::string& k) { c.discriminator_objective = parse_objective(get_as<std::string>(v, k)); }},
      {"generator.arch", [&](const json& v, const std::string& k) { c.generator.arch = parse_generator_arch(get_as<std::string>(v, k)); }},
      {"generator.base_filters", [&](const json& v, const std::string& k) { c.generator.base_filters = get_as<std::int64_t>(v, k); }},
      {"generator.n_resnet_blocks", [&](const json& v, const std::string& k) { c.generator.n_resnet_blocks = get_as<std::int64_t>(v, k); }},
      {"generator.n_unet_levels", [&](const json& v, const std::string& k) { c.generator.n_unet_levels = get_as<std::int64_t>(v, k); }},
      {"generator.use_dropout", [&](const json& v, const std::string& k) { c.generator.use_dropout = get_as<bool>(v, k); }},
      {"generator.channels", [&](const json& v, const std::string& k) {
         c.generator.in_channels = c.generator.out_channels = get_as<std::int64_t>(v, k);
         c.discriminator.image_channels = c.generator.in_channels;
       }},
      {"discriminator.base_filters", [&](const json& v, const std::string& k) { c.discriminator.base_filters = get_as<std::int64_t>(v, k); }},
      {"discriminator.n_layers", [&](const json& v, const std::string& k) { c.discriminator.n_layers = get_as<std::int64_t>(v, k); }},
      {"augment.resize_factor", [&](const json& v, const std::string& k) { c.resize_factor = get_as<double>(v, k); }},
      {"augment.flip", [&](const json& v, const std::string& k) { c.flip = get_as<bool>(v, k); }},
      {"checkpoint_every_epochs", [&](const json& v, const std::string& k) { c.checkpoint_every_epochs = get_as<std::int64_t>(v, k); }},
      {"sample_images", [&](const json& v, const std::string& k) { c.sample_images = get_as<std::int64_t>(v, k); }},
      {"device", [&](const json& v, const std::string& k) { c.device = get_as<std::string>(v, k); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value, key);
  }
  return c;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json().dump()); }

TrainConfig TrainConfig::desk_scale() {
  TrainConfig c;
  c.image_size = 32;
  c.generator = GeneratorConfig::miniature(GeneratorArch::resnet);
  c.discriminator = DiscriminatorConfig::miniature();
  c.total_epochs = 40;
  c.checkpoint_every_epochs = 10;
  return c;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) { return a.to_json() == b.to_json(); }

TrainingStage select_stage(std::int64_t epoch, const TrainConfig& cfg) {
  switch (cfg.variant) {
    case AblationVariant::no_stage1: return TrainingStage::stage2;
    case AblationVariant::no_stage2: return TrainingStage::stage1;
    default: break;
  }
  return epoch < cfg.resolved_stage_switch() ? TrainingStage::stage1 : TrainingStage::stage2;
}

}  // namespace transfig
