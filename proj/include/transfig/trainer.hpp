#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "transfig/checkpoint.hpp"
#include "transfig/data.hpp"
#include "transfig/discriminator.hpp"
#include "transfig/generator.hpp"
#include "transfig/image_pool.hpp"
#include "transfig/objectives.hpp"
#include "transfig/train_config.hpp"

namespace transfig {

// Everything that evolves during training. Holds exactly one discriminator,
// used by both translation directions.
struct TrainState {
  TrainConfig config;
  Generator g_ab;
  Generator g_ba;
  Discriminator d_shared;
  ImagePool pool_ab;
  ImagePool pool_ba;
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  TrainingStage stage = TrainingStage::stage1;
  std::unique_ptr<torch::optim::Optimizer> opt_d;
  std::unique_ptr<torch::optim::Optimizer> opt_g_ab;
  std::unique_ptr<torch::optim::Optimizer> opt_g_ba;
  // Pool-drawn generator inputs so far, and how many were generated images.
  std::int64_t inputs_seen = 0;
  std::int64_t generated_inputs_seen = 0;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const ImageSource> source_a,
          std::shared_ptr<const ImageSource> source_b);

  // One optimization step: sample a', b' from the pools, translate, update
  // D_shared, update G_AB and G_BA, route the translations into the pools.
  LossBreakdown train_step(const ImageBatch& a_real, const ImageBatch& b_real);

  // train_step on the unpaired real batches scheduled for the current step.
  LossBreakdown train_next();

  // Real batch of the given domain scheduled for a step. The larger dataset
  // defines the epoch; the smaller one cycles.
  ImageBatch real_batch(DomainTag domain, std::int64_t step) const;

  std::int64_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  std::int64_t total_steps() const noexcept;

  const TrainState& state() const noexcept { return state_; }
  TrainState& state() noexcept { return state_; }
  const TrainConfig& config() const noexcept { return state_.config; }

  CheckpointFile to_checkpoint() const;
  void restore(const CheckpointFile& ckpt);
  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  void sync_schedule();

  TrainState state_;
  std::shared_ptr<const ImageSource> source_a_;
  std::shared_ptr<const ImageSource> source_b_;
  std::int64_t steps_per_epoch_ = 1;
  torch::Device device_;
};

// Rebuilds a trainer (sources supplied by the caller) from a checkpoint file.
Trainer load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const ImageSource> source_a,
                        std::shared_ptr<const ImageSource> source_b);

struct LoadedGenerators {
  TrainConfig config;
  Generator g_ab;
  Generator g_ba;
  std::int64_t step = 0;
};

// Only the two generators, in evaluation mode; they are fully convolutional
// and accept any supported input size.
LoadedGenerators load_generators(const std::filesystem::path& path);

struct FitOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> resume_from;
  std::function<void(std::int64_t step, const LossBreakdown&)> on_step;
  bool quiet = true;
};

struct FitResult {
  std::filesystem::path run_dir;
  std::filesystem::path final_checkpoint;
  std::int64_t steps = 0;
  std::int64_t inputs_seen = 0;
  std::int64_t generated_inputs_seen = 0;
  std::size_t d_term_count = 0;
  LossBreakdown last;
};

// Run directory layout: config.json, losses.csv, checkpoints/step_N.ckpt,
// samples/epoch_N/{AB,BA}.png.
FitResult fit(const TrainConfig& cfg, std::shared_ptr<const ImageSource> source_a,
              std::shared_ptr<const ImageSource> source_b, const FitOptions& options);
FitResult fit(const TrainConfig& cfg, const UnpairedDataset& dataset_a, const UnpairedDataset& dataset_b,
              const FitOptions& options);

std::vector<std::string> loss_log_columns();
std::string loss_log_row(std::int64_t step, const LossBreakdown& losses);

}  // namespace transfig
