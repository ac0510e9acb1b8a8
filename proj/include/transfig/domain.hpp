#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

namespace transfig {

enum class Domain : std::uint8_t { A, B };

// Binary domain identity. Domain B carries label 1 and domain A label 0 for
// the whole run, whichever side of a translation the domain plays.
class DomainTag {
 public:
  constexpr explicit DomainTag(Domain id) noexcept : id_(id) {}

  static constexpr DomainTag a() noexcept { return DomainTag(Domain::A); }
  static constexpr DomainTag b() noexcept { return DomainTag(Domain::B); }

  constexpr Domain id() const noexcept { return id_; }
  constexpr bool label() const noexcept { return id_ == Domain::B; }
  constexpr double label_value() const noexcept { return label() ? 1.0 : 0.0; }
  constexpr DomainTag opposite() const noexcept {
    return DomainTag(id_ == Domain::A ? Domain::B : Domain::A);
  }
  constexpr const char* name() const noexcept { return id_ == Domain::A ? "A" : "B"; }

  friend constexpr bool operator==(DomainTag, DomainTag) noexcept = default;

 private:
  Domain id_;
};

enum class Provenance : std::uint8_t { dataset, generated };

const char* to_string(Provenance p) noexcept;

// n x c x h x w images in [-1, 1] with their domain and per-image origin.
struct ImageBatch {
  torch::Tensor data;
  DomainTag domain = DomainTag::a();
  std::vector<Provenance> provenance;

  static ImageBatch uniform(torch::Tensor data, DomainTag domain, Provenance p);

  std::int64_t size() const { return data.defined() ? data.size(0) : 0; }
  std::int64_t channels() const { return data.size(1); }
  std::int64_t height() const { return data.size(2); }
  std::int64_t width() const { return data.size(3); }

  bool all_from(Provenance p) const;
  std::int64_t count_from(Provenance p) const;

  // Throws DimensionError unless data is rank 4 and provenance has one entry
  // per image.
  void check_shape() const;
};

struct AugmentConfig {
  double resize_factor = 1.125;
  std::int64_t crop_size = 128;
  bool flip = false;

  // Side length of the intermediate resize, floor(crop_size * resize_factor).
  std::int64_t resized_size() const;
  void validate() const;
};

// Bytes in [0, 255] (uint8 or floating) to [-1, 1]. Floating input must be
// finite and in range, otherwise DataCorruptionError.
ImageBatch normalize(const torch::Tensor& raw, DomainTag domain,
                     Provenance provenance = Provenance::dataset);

struct ByteImages {
  torch::Tensor bytes;        // uint8, same shape as the input
  std::int64_t clamped = 0;   // values that fell outside [-1, 1]
};

ByteImages denormalize(const ImageBatch& batch);
ByteImages denormalize(const torch::Tensor& data);

// Bilinear resize (corner alignment off) to resized_size(), then an
// independent uniformly placed crop per image. Deterministic in rng_seed.
ImageBatch resize_and_crop(const ImageBatch& batch, const AugmentConfig& cfg,
                           std::uint64_t rng_seed);

// Plain bilinear resize of an n x c x h x w tensor to size x size.
torch::Tensor resize_square(const torch::Tensor& images, std::int64_t size);

}  // namespace transfig
