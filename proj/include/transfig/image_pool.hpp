#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "transfig/domain.hpp"
#include "transfig/generator.hpp"

namespace transfig {

// Read-only indexed access to one domain's (augmented) training images.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual DomainTag domain() const = 0;
  virtual std::size_t size() const = 0;
  // c x h x w in [-1, 1]; augmentation randomness keyed by seed.
  virtual torch::Tensor image(std::size_t index, std::uint64_t seed) const = 0;
};

// In-memory source over an n x c x h x w tensor; returns images unchanged.
class TensorImageSource final : public ImageSource {
 public:
  TensorImageSource(torch::Tensor images, DomainTag domain);
  DomainTag domain() const override { return domain_; }
  std::size_t size() const override { return static_cast<std::size_t>(images_.size(0)); }
  torch::Tensor image(std::size_t index, std::uint64_t seed) const override;

 private:
  torch::Tensor images_;
  DomainTag domain_;
};

enum class TrainingStage : std::uint8_t { stage1, stage2 };
const char* to_string(TrainingStage s) noexcept;

enum class PoolMixing : std::uint8_t { probabilistic, alternate };
const char* to_string(PoolMixing m) noexcept;
PoolMixing parse_pool_mixing(const std::string& name);

struct PoolConfig {
  std::size_t capacity = 50;
  double p_generated = 0.5;
  PoolMixing mixing = PoolMixing::probabilistic;
  std::string storage = "cpu";  // device holding buffered images

  void validate() const;
  friend bool operator==(const PoolConfig&, const PoolConfig&) = default;
};

// Everything needed to rebuild a pool's mutable state.
struct PoolState {
  std::vector<torch::Tensor> buffer;  // oldest first
  std::uint64_t dataset_pass = 0;
  std::uint64_t dataset_cursor = 0;
  std::uint64_t alternate_counter = 0;
};

// Input pool of one generator: its static source-domain dataset plus a
// bounded FIFO of generated images routed to it.
class ImagePool {
 public:
  ImagePool(GeneratorRole task, std::shared_ptr<const ImageSource> dataset, PoolConfig cfg,
            std::uint64_t seed);

  GeneratorRole task() const noexcept { return task_; }
  DomainTag source_domain() const noexcept { return task_.source(); }
  const PoolConfig& config() const noexcept { return cfg_; }
  std::size_t buffered() const noexcept { return buffer_.size(); }
  const ImageSource& dataset() const { return *dataset_; }

  // Images must already carry this pool's source-domain tag and generated
  // provenance. Stored detached; the oldest are evicted beyond capacity.
  void push(const ImageBatch& images);

  // Each slot draws from the buffer with probability p_generated (when
  // non-empty), else the next dataset image of the current shuffled pass.
  ImageBatch sample(std::size_t n, std::uint64_t rng_seed);

  PoolState state() const;
  void restore(const PoolState& state);

 private:
  torch::Tensor next_dataset_image(std::uint64_t aug_seed);

  GeneratorRole task_;
  std::shared_ptr<const ImageSource> dataset_;
  PoolConfig cfg_;
  std::uint64_t seed_;
  torch::Device storage_;
  std::deque<torch::Tensor> buffer_;
  std::uint64_t pass_ = 0;
  std::uint64_t cursor_ = 0;
  std::uint64_t alternate_counter_ = 0;
  std::vector<std::size_t> perm_;
  std::uint64_t perm_pass_ = ~std::uint64_t{0};
};

ImagePool init_pool(GeneratorRole task, std::shared_ptr<const ImageSource> dataset,
                    std::size_t capacity, double p_generated, std::uint64_t seed = 0);

// The pool that receives a generator's outputs: its own task's pool in
// stage 1, the inverse task's pool in stage 2.
GeneratorRole receiving_pool(GeneratorRole produced_by, TrainingStage stage) noexcept;

// Relabels images with the receiving pool's source domain and pushes them.
void route_push(ImagePool& pool_ab, ImagePool& pool_ba, GeneratorRole produced_by,
                const ImageBatch& images, TrainingStage stage);

}  // namespace transfig
