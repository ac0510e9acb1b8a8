#include "transfig/domain.hpp"

#include <cmath>
#include <random>

#include "transfig/errors.hpp"

namespace transfig {

const char* to_string(Provenance p) noexcept {
  return p == Provenance::dataset ? "dataset" : "generated";
}

ImageBatch ImageBatch::uniform(torch::Tensor data, DomainTag domain, Provenance p) {
  const auto n = data.defined() ? data.size(0) : 0;
  return ImageBatch{std::move(data), domain, std::vector<Provenance>(static_cast<std::size_t>(n), p)};
}

bool ImageBatch::all_from(Provenance p) const {
  return count_from(p) == static_cast<std::int64_t>(provenance.size());
}

std::int64_t ImageBatch::count_from(Provenance p) const {
  std::int64_t n = 0;
  for (auto q : provenance) n += (q == p);
  return n;
}

void ImageBatch::check_shape() const {
  if (!data.defined() || data.dim() != 4) {
    throw DimensionError("image batch must be rank 4 (n x c x h x w), got rank " +
                         std::to_string(data.defined() ? data.dim() : 0));
  }
  if (static_cast<std::int64_t>(provenance.size()) != data.size(0)) {
    throw DimensionError("provenance entries (" + std::to_string(provenance.size()) +
                         ") do not match batch axis 0 (" + std::to_string(data.size(0)) + ")");
  }
}

std::int64_t AugmentConfig::resized_size() const {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(crop_size) * resize_factor));
}

void AugmentConfig::validate() const {
  if (crop_size <= 0) throw ConfigError("augment crop_size must be positive");
  if (!std::isfinite(resize_factor) || resize_factor <= 0.0) {
    throw ConfigError("augment resize_factor must be finite and positive");
  }
  if (resized_size() < crop_size) {
    throw ConfigError("crop_size " + std::to_string(crop_size) +
                      " exceeds resized size " + std::to_string(resized_size()));
  }
}

ImageBatch normalize(const torch::Tensor& raw, DomainTag domain, Provenance provenance) {
  auto values = raw.to(torch::kFloat);
  if (raw.is_floating_point()) {
    if (!torch::isfinite(values).all().item<bool>()) {
      throw DataCorruptionError("non-finite pixel values in raw image data");
    }
    if (values.numel() > 0 && (values.min().item<float>() < 0.0f || values.max().item<float>() > 255.0f)) {
      throw DataCorruptionError("raw pixel values outside [0, 255]");
    }
  }
  auto data = values / 127.5f - 1.0f;
  if (data.dim() == 3) data = data.unsqueeze(0);
  auto batch = ImageBatch::uniform(data, domain, provenance);
  batch.check_shape();
  return batch;
}

ByteImages denormalize(const torch::Tensor& data) {
  ByteImages out;
  auto values = data.to(torch::kFloat);
  out.clamped = ((values < -1.0f) | (values > 1.0f) | torch::isnan(values)).sum().item<std::int64_t>();
  values = torch::nan_to_num(values, 0.0).clamp(-1.0f, 1.0f);
  out.bytes = torch::round((values + 1.0f) * 127.5f).clamp(0.0f, 255.0f).to(torch::kUInt8);
  return out;
}

ByteImages denormalize(const ImageBatch& batch) { return denormalize(batch.data); }

torch::Tensor resize_square(const torch::Tensor& images, std::int64_t size) {
  if (images.size(2) == size && images.size(3) == size) return images;
  namespace F = torch::nn::functional;
  return F::interpolate(images, F::InterpolateFuncOptions()
                                    .size(std::vector<std::int64_t>{size, size})
                                    .mode(torch::kBilinear)
                                    .align_corners(false));
}

ImageBatch resize_and_crop(const ImageBatch& batch, const AugmentConfig& cfg,
                           std::uint64_t rng_seed) {
  cfg.validate();
  batch.check_shape();
  const auto resized = cfg.resized_size();
  const auto crop = cfg.crop_size;
  auto scaled = resize_square(batch.data, resized);

  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::int64_t> offset(0, resized - crop);
  std::bernoulli_distribution coin(0.5);

  if (batch.size() == 0) {
    return ImageBatch{scaled.narrow(2, 0, crop).narrow(3, 0, crop), batch.domain, batch.provenance};
  }
  std::vector<torch::Tensor> crops;
  crops.reserve(static_cast<std::size_t>(batch.size()));
  for (std::int64_t i = 0; i < batch.size(); ++i) {
    const auto top = offset(rng);
    const auto left = offset(rng);
    auto img = scaled[i].narrow(1, top, crop).narrow(2, left, crop);
    if (cfg.flip && coin(rng)) img = img.flip({2});
    crops.push_back(img);
  }
  ImageBatch out{torch::stack(crops).contiguous(), batch.domain, batch.provenance};
  return out;
}

}  // namespace transfig
