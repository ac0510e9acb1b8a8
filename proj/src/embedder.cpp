#include "transfig/embedder.hpp"

#include <cmath>

#include "transfig/domain.hpp"
#include "transfig/errors.hpp"

namespace transfig {

namespace {

torch::nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t stride) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

}  // namespace

HermeticEmbedder::HermeticEmbedder(std::int64_t input_size) : input_size_(input_size) {
  if (input_size < 8) throw ConfigError("hermetic embedder input size must be >= 8");
  net_ = torch::nn::Sequential(conv(3, 16, 1), torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
                               conv(16, 32, 2), torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
                               conv(32, 16, 2), torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
  auto gen = at::make_generator<at::CPUGeneratorImpl>(kSeed);
  torch::NoGradGuard no_grad;
  for (auto& m : net_->modules(false)) {
    if (auto* c = m->as<torch::nn::Conv2dImpl>()) {
      const auto fan_in = static_cast<double>(c->weight.size(1) * c->weight.size(2) * c->weight.size(3));
      c->weight.normal_(0.0, std::sqrt(2.0 / fan_in), gen);
      c->bias.normal_(0.0, 0.1, gen);
    }
  }
  net_->eval();
  for (auto& p : net_->parameters()) p.requires_grad_(false);
}

std::string HermeticEmbedder::id() const { return "hermetic-conv32@" + std::to_string(input_size_); }

torch::Tensor HermeticEmbedder::embed_batch(const torch::Tensor& images) const {
  torch::NoGradGuard no_grad;
  auto h = net_.ptr()->forward(images.to(torch::kFloat));
  auto flat = h.flatten(2);
  return torch::cat({flat.mean(2), std::get<0>(flat.max(2))}, 1);
}

TorchScriptEmbedder::TorchScriptEmbedder(const std::filesystem::path& weights, std::int64_t input_size)
    : input_size_(input_size) {
  if (!std::filesystem::exists(weights)) throw ConfigError("embedder weight file not found: " + weights.string());
  try {
    module_ = torch::jit::load(weights.string());
  } catch (const c10::Error& e) {
    throw ConfigError("cannot load TorchScript embedder " + weights.string() + ": " + e.what_without_backtrace());
  }
  module_.eval();
  id_ = "torchscript:" + weights.filename().string() + "@" + std::to_string(input_size_);
  dim_ = embed_batch(torch::zeros({2, 3, input_size_, input_size_})).size(1);
}

torch::Tensor TorchScriptEmbedder::embed_batch(const torch::Tensor& images) const {
  torch::NoGradGuard no_grad;
  auto out = module_.forward({images.to(torch::kFloat)}).toTensor();
  out = out.flatten(1);
  if (out.dim() != 2 || out.size(0) != images.size(0)) {
    throw DimensionError("TorchScript embedder must return one feature row per image (axis 0)");
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec) {
  if (spec.empty() || spec == "hermetic") return std::make_unique<HermeticEmbedder>();
  return std::make_unique<TorchScriptEmbedder>(spec);
}

}  // namespace transfig
