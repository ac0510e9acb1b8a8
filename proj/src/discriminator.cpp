#include "transfig/discriminator.hpp"

#include <algorithm>

#include "transfig/errors.hpp"
#include "transfig/generator.hpp"
#include "transfig/rng.hpp"

namespace transfig {

namespace nn = torch::nn;

void DiscriminatorConfig::validate() const {
  if (base_filters < 1) throw ConfigError("discriminator base_filters must be >= 1");
  if (n_layers < 1) throw ConfigError("discriminator n_layers must be >= 1");
  if (image_channels < 1) throw ConfigError("discriminator image_channels must be >= 1");
}

void DiscriminatorConfig::validate_image_size(std::int64_t size) const {
  if (patch_grid_size(size, n_layers) < 1) {
    throw ConfigError("input side " + std::to_string(size) + " is too small for a " +
                      std::to_string(n_layers) + "-layer patch discriminator");
  }
}

DiscriminatorConfig DiscriminatorConfig::miniature() {
  DiscriminatorConfig cfg;
  cfg.base_filters = 8;
  return cfg;
}

// k4 convolutions: n_layers stride-2, then two stride-1 with padding 1.
std::int64_t patch_grid_size(std::int64_t input_size, std::int64_t n_layers) {
  std::int64_t s = input_size;
  for (std::int64_t i = 0; i < n_layers; ++i) {
    s = (s + 2 - 4) / 2 + 1;
    if (s < 1) return 0;
  }
  for (int i = 0; i < 2; ++i) s = s + 2 - 4 + 1;
  return std::max<std::int64_t>(s, 0);
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscriminatorConfig& cfg) {
  const auto b = cfg.base_filters;
  auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };
  auto norm = [](std::int64_t c) {
    return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(c).affine(false).track_running_stats(false));
  };

  nn::Sequential seq;
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(cfg.in_channels(), b, 4).stride(2).padding(1)));
  seq->push_back(lrelu());
  std::int64_t mult = 1;
  for (std::int64_t n = 1; n < cfg.n_layers; ++n) {
    const auto prev = mult;
    mult = std::min<std::int64_t>(std::int64_t{1} << n, 8);
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(b * prev, b * mult, 4).stride(2).padding(1)));
    seq->push_back(norm(b * mult));
    seq->push_back(lrelu());
  }
  const auto prev = mult;
  mult = std::min<std::int64_t>(std::int64_t{1} << cfg.n_layers, 8);
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(b * prev, b * mult, 4).stride(1).padding(1)));
  seq->push_back(norm(b * mult));
  seq->push_back(lrelu());
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(b * mult, 1, 4).stride(1).padding(1)));
  model_ = register_module("model", seq);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return model_->forward(x); }

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  net_ = PatchDiscriminator(cfg_);
  init_weights(*net_, derive_seed(seed, "discriminator-weights"));
}

PatchLogits Discriminator::discriminate(const torch::Tensor& candidate,
                                        const torch::Tensor& condition) const {
  if (candidate.dim() != 4 || condition.dim() != 4) {
    throw DimensionError("discriminator inputs must be rank 4 (n x c x h x w)");
  }
  static constexpr const char* kAxis[] = {"batch", "channel", "height", "width"};
  for (int axis = 0; axis < 4; ++axis) {
    if (candidate.size(axis) != condition.size(axis)) {
      throw DimensionError(std::string("candidate and condition differ on the ") + kAxis[axis] +
                           " axis (" + std::to_string(axis) + "): " +
                           std::to_string(candidate.size(axis)) + " vs " +
                           std::to_string(condition.size(axis)));
    }
  }
  if (candidate.size(1) != cfg_.image_channels) {
    throw DimensionError("discriminator channel axis (1) has size " + std::to_string(candidate.size(1)) +
                         ", expected " + std::to_string(cfg_.image_channels));
  }
  return PatchLogits{net_.ptr()->forward(torch::cat({candidate, condition}, 1))};
}

PatchLogits Discriminator::discriminate(const ImageBatch& candidate, const ImageBatch& condition) const {
  return discriminate(candidate.data, condition.data);
}

Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  return Discriminator(cfg, seed);
}

PatchLogits discriminate(const Discriminator& d, const ImageBatch& candidate, const ImageBatch& condition) {
  return d.discriminate(candidate, condition);
}

}  // namespace transfig
