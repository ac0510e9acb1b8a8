#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

#include "transfig/discriminator.hpp"
#include "transfig/domain.hpp"
#include "transfig/generator.hpp"
#include "transfig/image_pool.hpp"
#include "transfig/objectives.hpp"

namespace transfig {

enum class AblationVariant : std::uint8_t { baseline, d_shared1, no_pool, no_stage1, no_stage2 };

const char* to_string(AblationVariant v) noexcept;
AblationVariant parse_variant(const std::string& name);

enum class OptimizerKind : std::uint8_t { adam, rmsprop };
const char* to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  std::int64_t total_epochs = 200;
  std::int64_t stage_switch_epoch = -1;  // -1: half of total_epochs
  std::int64_t max_steps = 0;            // 0: run all epochs
  std::int64_t batch_size = 4;
  double lr = 1e-4;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  LossWeights weights;
  std::int64_t image_size = 128;
  std::uint64_t seed = 0;
  PoolConfig pool;
  AblationVariant variant = AblationVariant::baseline;
  DiscriminatorObjective discriminator_objective = DiscriminatorObjective::full;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  double resize_factor = 1.125;
  bool flip = false;
  std::int64_t checkpoint_every_epochs = 10;
  std::int64_t sample_images = 4;  // per direction in epoch sample grids; 0 disables
  std::string device = "cpu";

  std::int64_t resolved_stage_switch() const;
  AugmentConfig augment() const;
  void validate() const;

  // Flat object with dotted keys ("pool.capacity", "weights.lambda_rec", ...).
  nlohmann::json to_json() const;
  // Overlays the given flat keys on top of base; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j);
  // FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;

  // Miniature 32x32 desk-scale defaults.
  static TrainConfig desk_scale();
};

bool operator==(const TrainConfig& a, const TrainConfig& b);

TrainingStage select_stage(std::int64_t epoch, const TrainConfig& cfg);

}  // namespace transfig
