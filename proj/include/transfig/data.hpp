#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "transfig/domain.hpp"
#include "transfig/image_pool.hpp"

namespace transfig {

namespace fs = std::filesystem;

struct UnpairedDataset {
  DomainTag domain = DomainTag::a();
  std::vector<fs::path> image_paths;  // lexicographic

  std::size_t size() const noexcept { return image_paths.size(); }
};

struct LoadStats {
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Every decodable raster in dir, sorted by path. Undecodable files are skipped
// and counted; a directory with no usable images is a ConfigError.
UnpairedDataset load_domain(const fs::path& dir, DomainTag domain, LoadStats* stats = nullptr);

std::pair<UnpairedDataset, UnpairedDataset> load_unpaired(const fs::path& dir_a, const fs::path& dir_b,
                                                          LoadStats* stats_a = nullptr,
                                                          LoadStats* stats_b = nullptr);

// <root>/trainA, trainB, testA, testB.
struct DataLayout {
  fs::path root;

  fs::path train_a() const { return root / "trainA"; }
  fs::path train_b() const { return root / "trainB"; }
  fs::path test_a() const { return root / "testA"; }
  fs::path test_b() const { return root / "testB"; }
  fs::path train_dir(DomainTag d) const { return d == DomainTag::a() ? train_a() : train_b(); }
  fs::path test_dir(DomainTag d) const { return d == DomainTag::a() ? test_a() : test_b(); }
  // Evaluation-only foreground masks, mirrored file names.
  fs::path mask_dir(const std::string& split_dir) const { return root / "masks" / split_dir; }
};

struct KnownDataset {
  std::string_view name;
  std::size_t train_a;
  std::size_t train_b;
};

// Published training-set sizes of the public transfiguration datasets.
inline constexpr std::array<KnownDataset, 2> kKnownDatasets{{
    {"horse2zebra", 939, 1177},
    {"apple2orange", 996, 1020},
}};

std::optional<KnownDataset> find_known_dataset(std::string_view name);

// 3 x h x w uint8 RGB. DataCorruptionError if the file cannot be decoded.
torch::Tensor read_rgb(const fs::path& path);
void write_rgb(const fs::path& path, const torch::Tensor& rgb_bytes);
// h x w bool.
torch::Tensor read_mask(const fs::path& path);

// n x 3 x size x size in [-1, 1] (plain bilinear resize, no crop).
torch::Tensor load_images(const UnpairedDataset& ds, std::int64_t size);

// Training-time view of a dataset: decode (cached while under budget),
// normalize, then resize-and-crop keyed by the caller's seed.
class DatasetImageSource final : public ImageSource {
 public:
  DatasetImageSource(UnpairedDataset dataset, AugmentConfig augment,
                     std::size_t cache_budget_bytes = std::size_t{512} << 20);

  DomainTag domain() const override { return dataset_.domain; }
  std::size_t size() const override { return dataset_.size(); }
  torch::Tensor image(std::size_t index, std::uint64_t seed) const override;

  const UnpairedDataset& dataset() const noexcept { return dataset_; }

 private:
  torch::Tensor raw(std::size_t index) const;

  UnpairedDataset dataset_;
  AugmentConfig augment_;
  std::size_t cache_budget_;
  mutable std::mutex mutex_;
  mutable std::vector<torch::Tensor> cache_;
  mutable std::size_t cached_bytes_ = 0;
};

enum class SyntheticTask : std::uint8_t { color_swap };

using Rgb = std::array<std::uint8_t, 3>;

struct SyntheticSpec {
  std::size_t n_per_domain = 200;
  std::size_t n_test_per_domain = 0;
  std::int64_t image_size = 32;
  SyntheticTask task = SyntheticTask::color_swap;
  Rgb fg_color_a{220, 40, 40};
  Rgb fg_color_b{40, 40, 220};
  std::uint64_t bg_texture_seed = 0;
  std::uint64_t shape_seed = 1;

  void validate() const;
};

struct SyntheticImage {
  torch::Tensor rgb;   // 3 x s x s uint8
  torch::Tensor mask;  // s x s bool, true on the object
};

// Domain A and B images share the background distribution and differ only in
// the object's fill color.
SyntheticImage render_synthetic(const SyntheticSpec& spec, DomainTag domain, bool test_split, std::size_t index);

// Writes trainA/trainB (and testA/testB when n_test_per_domain > 0) plus masks.
DataLayout make_synthetic(const SyntheticSpec& spec, const fs::path& out_dir);

}  // namespace transfig
