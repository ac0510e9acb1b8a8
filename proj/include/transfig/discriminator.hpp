#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>

#include "transfig/domain.hpp"

namespace transfig {

struct DiscriminatorConfig {
  std::int64_t base_filters = 64;
  std::int64_t n_layers = 3;
  std::int64_t image_channels = 3;

  // Candidate and condition are concatenated along channels.
  std::int64_t in_channels() const { return 2 * image_channels; }
  void validate() const;
  // ConfigError unless the patch grid for this side length is non-empty.
  void validate_image_size(std::int64_t size) const;

  static DiscriminatorConfig miniature();

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

// n x 1 x h_p x w_p raw (pre-sigmoid) patch scores.
struct PatchLogits {
  torch::Tensor logits;
};

class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(const DiscriminatorConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential model_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

// The one discriminator shared by both translation directions. Move-only so a
// train state can hold exactly one instance.
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig cfg, std::uint64_t seed);

  Discriminator(Discriminator&&) noexcept = default;
  Discriminator& operator=(Discriminator&&) noexcept = default;
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  PatchLogits discriminate(const torch::Tensor& candidate, const torch::Tensor& condition) const;
  PatchLogits discriminate(const ImageBatch& candidate, const ImageBatch& condition) const;

  const DiscriminatorConfig& config() const noexcept { return cfg_; }
  PatchDiscriminatorImpl& net() const { return *net_.ptr(); }
  std::shared_ptr<PatchDiscriminatorImpl> net_ptr() const { return net_.ptr(); }
  std::vector<torch::Tensor> parameters() const { return net_.ptr()->parameters(); }
  void train(bool on = true) const { net_.ptr()->train(on); }
  void to(torch::Dtype dtype) const { net_.ptr()->to(dtype); }

 private:
  DiscriminatorConfig cfg_;
  PatchDiscriminator net_{nullptr};
};

Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);
PatchLogits discriminate(const Discriminator& d, const ImageBatch& candidate, const ImageBatch& condition);

// Side length of the patch grid for a square input.
std::int64_t patch_grid_size(std::int64_t input_size, std::int64_t n_layers);

}  // namespace transfig
