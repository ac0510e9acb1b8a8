#include "transfig/generator.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

namespace nn = torch::nn;

const char* to_string(GeneratorArch arch) noexcept {
  return arch == GeneratorArch::unet ? "unet" : "resnet";
}

GeneratorArch parse_generator_arch(const std::string& name) {
  if (name == "unet") return GeneratorArch::unet;
  if (name == "resnet") return GeneratorArch::resnet;
  throw ConfigError("unknown generator architecture '" + name + "' (expected unet or resnet)");
}

GeneratorRole parse_generator_role(const std::string& name) {
  if (name == "AB" || name == "ab") return GeneratorRole::ab();
  if (name == "BA" || name == "ba") return GeneratorRole::ba();
  throw ConfigError("unknown translation direction '" + name + "' (expected AB or BA)");
}

void GeneratorConfig::validate() const {
  if (base_filters < 1) throw ConfigError("generator base_filters must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("generator channel counts must be >= 1");
  if (arch == GeneratorArch::resnet && n_resnet_blocks < 0) {
    throw ConfigError("generator n_resnet_blocks must be >= 0");
  }
  if (arch == GeneratorArch::unet && (n_unet_levels < 1 || n_unet_levels > 12)) {
    throw ConfigError("generator n_unet_levels must be in [1, 12]");
  }
}

void GeneratorConfig::validate_image_size(std::int64_t size) const {
  if (arch == GeneratorArch::resnet) {
    if (size < 8 || size % 4 != 0) {
      throw ConfigError("resnet generator needs a side length divisible by 4 and >= 8, got " +
                        std::to_string(size));
    }
  } else {
    const std::int64_t step = std::int64_t{1} << n_unet_levels;
    if (size % step != 0) {
      throw ConfigError("unet generator with " + std::to_string(n_unet_levels) +
                        " levels needs a side length divisible by " + std::to_string(step) +
                        ", got " + std::to_string(size));
    }
  }
}

GeneratorConfig GeneratorConfig::for_image_size(GeneratorArch arch, std::int64_t size) {
  GeneratorConfig cfg;
  cfg.arch = arch;
  cfg.n_resnet_blocks = size >= 256 ? 9 : 6;
  cfg.n_unet_levels = size >= 256 ? 8 : 7;
  return cfg;
}

GeneratorConfig GeneratorConfig::miniature(GeneratorArch arch) {
  GeneratorConfig cfg;
  cfg.arch = arch;
  cfg.base_filters = 8;
  cfg.n_resnet_blocks = 2;
  cfg.n_unet_levels = 2;
  return cfg;
}

SeededDropoutImpl::SeededDropoutImpl(double p, std::uint64_t seed)
    : p_(p), rng_(at::make_generator<at::CPUGeneratorImpl>(seed)) {}

torch::Tensor SeededDropoutImpl::forward(const torch::Tensor& x) {
  if (!is_training() || p_ <= 0.0) return x;
  auto keep = torch::empty_like(x).bernoulli_(1.0 - p_, rng_);
  return x * keep / (1.0 - p_);
}

namespace {

nn::InstanceNorm2d instance_norm(std::int64_t channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(false).track_running_stats(false));
}

class ResnetBlockImpl : public nn::Module {
 public:
  ResnetBlockImpl(std::int64_t dim, bool use_dropout, std::uint64_t dropout_seed) {
    body_->push_back(nn::ReflectionPad2d(1));
    body_->push_back(nn::Conv2d(nn::Conv2dOptions(dim, dim, 3)));
    body_->push_back(instance_norm(dim));
    body_->push_back(nn::ReLU());
    if (use_dropout) body_->push_back(SeededDropout(0.5, dropout_seed));
    body_->push_back(nn::ReflectionPad2d(1));
    body_->push_back(nn::Conv2d(nn::Conv2dOptions(dim, dim, 3)));
    body_->push_back(instance_norm(dim));
    register_module("body", body_);
  }

  torch::Tensor forward(const torch::Tensor& x) { return x + body_->forward(x); }

 private:
  nn::Sequential body_;
};
TORCH_MODULE(ResnetBlock);

}  // namespace

ResnetGeneratorImpl::ResnetGeneratorImpl(const GeneratorConfig& cfg, std::uint64_t dropout_seed) {
  const auto b = cfg.base_filters;
  nn::Sequential seq;
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(cfg.in_channels, b, 7)));
  seq->push_back(instance_norm(b));
  seq->push_back(nn::ReLU());

  std::int64_t ch = b;
  for (int i = 0; i < 2; ++i) {
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, ch * 2, 3).stride(2).padding(1)));
    seq->push_back(instance_norm(ch * 2));
    seq->push_back(nn::ReLU());
    ch *= 2;
  }
  for (std::int64_t i = 0; i < cfg.n_resnet_blocks; ++i) {
    seq->push_back(ResnetBlock(ch, cfg.use_dropout,
                               derive_seed(dropout_seed, "resnet-block", {static_cast<std::uint64_t>(i)})));
  }
  for (int i = 0; i < 2; ++i) {
    seq->push_back(nn::ConvTranspose2d(
        nn::ConvTranspose2dOptions(ch, ch / 2, 3).stride(2).padding(1).output_padding(1)));
    seq->push_back(instance_norm(ch / 2));
    seq->push_back(nn::ReLU());
    ch /= 2;
  }
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(ch, cfg.out_channels, 7)));
  seq->push_back(nn::Tanh());
  model_ = register_module("model", seq);
}

torch::Tensor ResnetGeneratorImpl::forward(const torch::Tensor& x) { return model_->forward(x); }

UnetGeneratorImpl::UnetGeneratorImpl(const GeneratorConfig& cfg, std::uint64_t dropout_seed) {
  const auto levels = cfg.n_unet_levels;
  const auto b = cfg.base_filters;
  std::vector<std::int64_t> filters(static_cast<std::size_t>(levels));
  for (std::int64_t i = 0; i < levels; ++i) {
    filters[static_cast<std::size_t>(i)] = b * std::min<std::int64_t>(std::int64_t{1} << std::min<std::int64_t>(i, 3), 8);
  }
  auto f = [&](std::int64_t i) { return filters[static_cast<std::size_t>(i)]; };

  for (std::int64_t i = 0; i < levels; ++i) {
    nn::Sequential down;
    const auto in_ch = i == 0 ? cfg.in_channels : f(i - 1);
    if (i > 0) down->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    down->push_back(nn::Conv2d(nn::Conv2dOptions(in_ch, f(i), 4).stride(2).padding(1)));
    if (i > 0 && i < levels - 1) down->push_back(instance_norm(f(i)));
    down_.push_back(register_module("down" + std::to_string(i), down));
  }
  for (std::int64_t i = 0; i < levels; ++i) {
    nn::Sequential up;
    const auto in_ch = i == levels - 1 ? f(i) : 2 * f(i);
    const auto out_ch = i == 0 ? cfg.out_channels : f(i - 1);
    up->push_back(nn::ReLU());
    up->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
    if (i == 0) {
      up->push_back(nn::Tanh());
    } else {
      up->push_back(instance_norm(out_ch));
      const bool deep = i < levels - 1 && f(i) == 8 * b && f(i - 1) == 8 * b;
      if (cfg.use_dropout && deep) {
        up->push_back(SeededDropout(0.5, derive_seed(dropout_seed, "unet-up", {static_cast<std::uint64_t>(i)})));
      }
    }
    up_.push_back(register_module("up" + std::to_string(i), up));
  }
}

torch::Tensor UnetGeneratorImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> skips;
  skips.reserve(down_.size());
  auto h = x;
  for (auto& d : down_) {
    h = d->forward(h);
    skips.push_back(h);
  }
  const auto levels = static_cast<std::int64_t>(up_.size());
  for (std::int64_t i = levels - 1; i >= 0; --i) {
    h = up_[static_cast<std::size_t>(i)]->forward(h);
    if (i > 0) h = torch::cat({skips[static_cast<std::size_t>(i - 1)], h}, 1);
  }
  return h;
}

torch::Tensor UnetGeneratorImpl::bottleneck(const torch::Tensor& x) {
  auto h = x;
  for (auto& d : down_) h = d->forward(h);
  return h;
}

void init_weights(torch::nn::Module& module, std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  for (auto& item : module.named_parameters(/*recurse=*/true)) {
    auto& p = item.value();
    if (item.key().ends_with("bias")) {
      p.zero_();
    } else {
      p.normal_(0.0, 0.02, gen);
    }
  }
}

Generator::Generator(GeneratorConfig cfg, GeneratorRole role, std::uint64_t seed)
    : cfg_(cfg), role_(role) {
  cfg_.validate();
  const auto dropout_seed = derive_seed(seed, "generator-dropout");
  if (cfg_.arch == GeneratorArch::resnet) {
    net_ = std::make_shared<ResnetGeneratorImpl>(cfg_, dropout_seed);
  } else {
    net_ = std::make_shared<UnetGeneratorImpl>(cfg_, dropout_seed);
  }
  init_weights(*net_, derive_seed(seed, "generator-weights"));
}

void Generator::check_input(const torch::Tensor& x) const {
  if (!x.defined() || x.dim() != 4) {
    throw DimensionError("generator input must be rank 4 (n x c x h x w)");
  }
  if (x.size(1) != cfg_.in_channels) {
    throw DimensionError("generator input channel axis (1) has size " + std::to_string(x.size(1)) +
                         ", expected " + std::to_string(cfg_.in_channels));
  }
  for (int axis : {2, 3}) {
    try {
      cfg_.validate_image_size(x.size(axis));
    } catch (const ConfigError& e) {
      throw DimensionError(std::string(axis == 2 ? "height" : "width") + " axis (" +
                           std::to_string(axis) + "): " + e.what());
    }
  }
}

torch::Tensor Generator::forward(const torch::Tensor& x) const {
  check_input(x);
  return net_->forward(x);
}

ImageBatch Generator::forward(const ImageBatch& x) const {
  x.check_shape();
  if (x.domain != role_.source()) {
    throw ContractViolation(std::string("generator ") + role_.name() + " expects domain " +
                            role_.source().name() + " input, got " + x.domain.name());
  }
  return ImageBatch::uniform(forward(x.data), role_.target(), Provenance::generated);
}

std::int64_t Generator::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : net_->parameters()) n += p.numel();
  return n;
}

std::vector<torch::Tensor> Generator::rng_states() const {
  std::vector<torch::Tensor> states;
  for (const auto& m : net_->modules(/*include_self=*/false)) {
    if (auto* d = dynamic_cast<SeededDropoutImpl*>(m.get())) states.push_back(d->rng().get_state());
  }
  return states;
}

void Generator::set_rng_states(const std::vector<torch::Tensor>& states) const {
  std::size_t k = 0;
  for (const auto& m : net_->modules(/*include_self=*/false)) {
    if (auto* d = dynamic_cast<SeededDropoutImpl*>(m.get())) {
      if (k >= states.size()) throw CheckpointError("missing dropout RNG state");
      d->rng().set_state(states[k++]);
    }
  }
  if (k != states.size()) throw CheckpointError("unexpected extra dropout RNG states");
}

Generator build_generator(const GeneratorConfig& cfg, GeneratorRole role, std::uint64_t seed) {
  return Generator(cfg, role, seed);
}

ImageBatch generator_forward(const Generator& g, const ImageBatch& x) { return g.forward(x); }

}  // namespace transfig
