#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>

#include "transfig/domain.hpp"

namespace transfig {

enum class GeneratorArch : std::uint8_t { unet, resnet };

const char* to_string(GeneratorArch arch) noexcept;
GeneratorArch parse_generator_arch(const std::string& name);

struct GeneratorConfig {
  GeneratorArch arch = GeneratorArch::resnet;
  std::int64_t base_filters = 64;
  std::int64_t n_resnet_blocks = 6;  // 9 at 256px
  std::int64_t n_unet_levels = 7;    // 8 at 256px; bottleneck is 1x1
  bool use_dropout = false;
  std::int64_t in_channels = 3;
  std::int64_t out_channels = 3;

  void validate() const;
  // ConfigError unless images of this side length pass through the network.
  void validate_image_size(std::int64_t size) const;

  // Full-size defaults for 128px or 256px training.
  static GeneratorConfig for_image_size(GeneratorArch arch, std::int64_t size);
  // 8 filters, two residual blocks or two UNet levels; for 32x32 desk runs.
  static GeneratorConfig miniature(GeneratorArch arch);

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

enum class TranslationRole : std::uint8_t { AB, BA };

// Which way a generator translates. Source and target follow from the role.
class GeneratorRole {
 public:
  constexpr explicit GeneratorRole(TranslationRole role) noexcept : role_(role) {}
  static constexpr GeneratorRole ab() noexcept { return GeneratorRole(TranslationRole::AB); }
  static constexpr GeneratorRole ba() noexcept { return GeneratorRole(TranslationRole::BA); }

  constexpr TranslationRole role() const noexcept { return role_; }
  constexpr DomainTag source() const noexcept {
    return role_ == TranslationRole::AB ? DomainTag::a() : DomainTag::b();
  }
  constexpr DomainTag target() const noexcept { return source().opposite(); }
  constexpr GeneratorRole inverse() const noexcept {
    return GeneratorRole(role_ == TranslationRole::AB ? TranslationRole::BA : TranslationRole::AB);
  }
  constexpr const char* name() const noexcept { return role_ == TranslationRole::AB ? "AB" : "BA"; }

  friend constexpr bool operator==(GeneratorRole, GeneratorRole) noexcept = default;

 private:
  TranslationRole role_;
};

GeneratorRole parse_generator_role(const std::string& name);

// Dropout drawing its masks from a private generator so that runs never touch
// the global torch RNG.
class SeededDropoutImpl : public torch::nn::Module {
 public:
  SeededDropoutImpl(double p, std::uint64_t seed);
  torch::Tensor forward(const torch::Tensor& x);

  at::Generator& rng() { return rng_; }

 private:
  double p_;
  at::Generator rng_;
};
TORCH_MODULE(SeededDropout);

class GeneratorNetImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& x) = 0;
};

class ResnetGeneratorImpl : public GeneratorNetImpl {
 public:
  ResnetGeneratorImpl(const GeneratorConfig& cfg, std::uint64_t dropout_seed);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  torch::nn::Sequential model_{nullptr};
};

class UnetGeneratorImpl : public GeneratorNetImpl {
 public:
  UnetGeneratorImpl(const GeneratorConfig& cfg, std::uint64_t dropout_seed);
  torch::Tensor forward(const torch::Tensor& x) override;
  // Innermost encoder activation.
  torch::Tensor bottleneck(const torch::Tensor& x);

 private:
  std::vector<torch::nn::Sequential> down_;
  std::vector<torch::nn::Sequential> up_;
};

// One translation network (G_AB or G_BA) plus its configuration and role.
// Move-only: the parameters live in exactly one place.
class Generator {
 public:
  Generator(GeneratorConfig cfg, GeneratorRole role, std::uint64_t seed);

  Generator(Generator&&) noexcept = default;
  Generator& operator=(Generator&&) noexcept = default;
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  // Tags the output with the target domain and generated provenance.
  ImageBatch forward(const ImageBatch& x) const;
  torch::Tensor forward(const torch::Tensor& x) const;

  void check_input(const torch::Tensor& x) const;

  const GeneratorConfig& config() const noexcept { return cfg_; }
  GeneratorRole role() const noexcept { return role_; }
  GeneratorNetImpl& net() const { return *net_; }
  std::shared_ptr<GeneratorNetImpl> net_ptr() const { return net_; }

  std::vector<torch::Tensor> parameters() const { return net_->parameters(); }
  std::int64_t parameter_count() const;
  void train(bool on = true) const { net_->train(on); }
  bool is_training() const { return net_->is_training(); }
  void to(torch::Dtype dtype) const { net_->to(dtype); }

  // Dropout RNG states, in module order; empty when dropout is off.
  std::vector<torch::Tensor> rng_states() const;
  void set_rng_states(const std::vector<torch::Tensor>& states) const;

 private:
  GeneratorConfig cfg_;
  GeneratorRole role_;
  std::shared_ptr<GeneratorNetImpl> net_;
};

Generator build_generator(const GeneratorConfig& cfg, GeneratorRole role, std::uint64_t seed);
ImageBatch generator_forward(const Generator& g, const ImageBatch& x);

// N(0, 0.02) weights and zero biases drawn from a generator seeded with seed.
void init_weights(torch::nn::Module& module, std::uint64_t seed);

}  // namespace transfig
