#pragma once

#include <torch/script.h>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace transfig {

// Maps n x 3 x s x s images in [-1, 1] (s = input_size()) to n x dim() features.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::int64_t input_size() const = 0;
  virtual std::int64_t dim() const = 0;
  virtual torch::Tensor embed_batch(const torch::Tensor& images) const = 0;
};

// Small random convolutional net with weights fixed by a constant seed, so the
// features are reproducible without any external file. Output is the spatial
// mean and max of the last layer's channels.
class HermeticEmbedder final : public Embedder {
 public:
  static constexpr std::uint64_t kSeed = 0x7f4a7c15d1ce4e5bULL;

  explicit HermeticEmbedder(std::int64_t input_size = 32);

  std::string id() const override;
  std::int64_t input_size() const override { return input_size_; }
  std::int64_t dim() const override { return 32; }
  torch::Tensor embed_batch(const torch::Tensor& images) const override;

 private:
  std::int64_t input_size_;
  torch::nn::Sequential net_;
};

// A serialized TorchScript feature extractor, e.g. an exported Inception pool3
// network. The module receives [-1, 1] images at input_size and must return
// n x d (or n x d x 1 x 1).
class TorchScriptEmbedder final : public Embedder {
 public:
  TorchScriptEmbedder(const std::filesystem::path& weights, std::int64_t input_size = 299);

  std::string id() const override { return id_; }
  std::int64_t input_size() const override { return input_size_; }
  std::int64_t dim() const override { return dim_; }
  torch::Tensor embed_batch(const torch::Tensor& images) const override;

 private:
  mutable torch::jit::script::Module module_;
  std::string id_;
  std::int64_t input_size_;
  std::int64_t dim_ = 0;
};

// "hermetic" or a path to a TorchScript file.
std::unique_ptr<Embedder> make_embedder(const std::string& spec);

}  // namespace transfig
