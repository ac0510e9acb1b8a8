#pragma once

#include <Eigen/Dense>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "transfig/embedder.hpp"
#include "transfig/generator.hpp"

namespace transfig {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureSet {
  Eigen::MatrixXd features;  // n x d
  std::string embedder_id;

  std::int64_t size() const { return features.rows(); }
  std::int64_t dim() const { return features.cols(); }
  // n >= 2 and every value finite.
  void validate() const;
};

// images: n x 3 x h x w in [-1, 1]; resized to the embedder's input size.
FeatureSet embed(const Embedder& embedder, const torch::Tensor& images, std::int64_t batch_size = 64);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (n - 1)
};

Moments moments(const FeatureSet& x);

// Symmetric PSD square root by eigendecomposition, negative eigenvalues
// clamped at zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

double fid_from_moments(const Moments& x, const Moments& y);
double fid(const FeatureSet& x, const FeatureSet& y);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std over the iterations
};

// FID between bootstrap resamples of `generated` and the full `real` set.
MeanStd fid_bootstrap(const FeatureSet& generated, const FeatureSet& real, std::int64_t iterations,
                      std::uint64_t seed);

// Unbiased MMD^2 with k(u, v) = (u.v / d + 1)^3.
double mmd2_unbiased_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

MeanStd kid(const FeatureSet& x, const FeatureSet& y, std::int64_t subset_size, std::int64_t iterations = 100,
            std::uint64_t seed = 0);

struct MetricEntry {
  std::string direction;  // "AB" or "BA"
  double fid_mean = 0.0;
  double fid_std = 0.0;
  double kid_mean_x100 = 0.0;
  double kid_std_x100 = 0.0;
  std::int64_t n_translated = 0;
  std::int64_t n_target = 0;

  bool finite() const;
};

struct MetricReport {
  std::string embedder_id;
  std::string checkpoint_id;
  std::vector<MetricEntry> entries;

  const MetricEntry* find(const std::string& direction) const;

  std::string to_csv() const;
  static MetricReport from_csv(const std::string& text);
  std::string to_table() const;
};

struct EvalOptions {
  std::int64_t eval_size = 256;
  std::int64_t fid_iterations = 10;
  std::int64_t kid_iterations = 100;
  std::int64_t kid_subset_size = 0;  // 0: min(n_translated, n_target, 1000)
  std::uint64_t seed = 0;
  std::int64_t batch_size = 16;
};

using Translator = std::function<torch::Tensor(const torch::Tensor&)>;

// Translates every source image (already at evaluation size), embeds the
// translations and the real target images, and scores them.
MetricEntry evaluate_translation(const Translator& translate, GeneratorRole direction, const torch::Tensor& source,
                                 const torch::Tensor& target, const Embedder& embedder, const EvalOptions& options);

Translator generator_translator(const Generator& g, std::int64_t batch_size = 16);

MetricEntry evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& test_source,
                     const std::filesystem::path& test_target, GeneratorRole direction, const Embedder& embedder,
                     const EvalOptions& options = {});

// Both directions from <data_root>/testA and testB.
MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& data_root,
                                 const Embedder& embedder, const EvalOptions& options = {});

}  // namespace transfig
