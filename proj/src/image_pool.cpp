#include "transfig/image_pool.hpp"

#include <cmath>
#include <random>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

TensorImageSource::TensorImageSource(torch::Tensor images, DomainTag domain)
    : images_(std::move(images)), domain_(domain) {
  if (!images_.defined() || images_.dim() != 4) throw DimensionError("image source needs an n x c x h x w tensor");
  if (images_.size(0) == 0) throw ConfigError("image source is empty");
}

torch::Tensor TensorImageSource::image(std::size_t index, std::uint64_t /*seed*/) const {
  return images_[static_cast<std::int64_t>(index)];
}

const char* to_string(TrainingStage s) noexcept { return s == TrainingStage::stage1 ? "stage1" : "stage2"; }

const char* to_string(PoolMixing m) noexcept {
  return m == PoolMixing::probabilistic ? "probabilistic" : "alternate";
}

PoolMixing parse_pool_mixing(const std::string& name) {
  if (name == "probabilistic") return PoolMixing::probabilistic;
  if (name == "alternate") return PoolMixing::alternate;
  throw ConfigError("unknown pool mixing '" + name + "' (expected probabilistic or alternate)");
}

void PoolConfig::validate() const {
  if (!(p_generated >= 0.0 && p_generated <= 1.0)) throw ConfigError("pool p_generated must be in [0, 1]");
  try {
    torch::Device dev(storage);
    if (dev.is_cuda() && !torch::cuda::is_available()) {
      throw ConfigError("pool storage '" + storage + "' requested but CUDA is unavailable");
    }
  } catch (const c10::Error&) {
    throw ConfigError("invalid pool storage device '" + storage + "'");
  }
}

ImagePool::ImagePool(GeneratorRole task, std::shared_ptr<const ImageSource> dataset, PoolConfig cfg,
                     std::uint64_t seed)
    : task_(task), dataset_(std::move(dataset)), cfg_(std::move(cfg)), seed_(seed), storage_(torch::kCPU) {
  cfg_.validate();
  storage_ = torch::Device(cfg_.storage);
  if (!dataset_ || dataset_->size() == 0) {
    throw ConfigError(std::string("image pool ") + task_.name() + " needs a non-empty dataset");
  }
  if (dataset_->domain() != task_.source()) {
    throw ConfigError(std::string("image pool ") + task_.name() + " dataset must hold domain " +
                      task_.source().name() + " images");
  }
}

void ImagePool::push(const ImageBatch& images) {
  images.check_shape();
  if (!images.all_from(Provenance::generated)) {
    throw ContractViolation("only generated images may be pushed into an image pool");
  }
  if (images.domain != source_domain()) {
    throw ContractViolation(std::string("pool ") + task_.name() + " accepts domain " + source_domain().name() +
                            " images only, got " + images.domain.name());
  }
  if (cfg_.capacity == 0) return;
  auto detached = images.data.detach().to(storage_, torch::kFloat).clone();
  for (std::int64_t i = 0; i < detached.size(0); ++i) {
    buffer_.push_back(detached[i]);
    if (buffer_.size() > cfg_.capacity) buffer_.pop_front();
  }
}

torch::Tensor ImagePool::next_dataset_image(std::uint64_t aug_seed) {
  const auto n = dataset_->size();
  if (cursor_ >= n) {
    cursor_ = 0;
    ++pass_;
  }
  if (perm_pass_ != pass_) {
    perm_ = seeded_permutation(n, derive_seed(seed_, "pool-pass", {pass_}));
    perm_pass_ = pass_;
  }
  return dataset_->image(perm_[cursor_++], aug_seed);
}

ImageBatch ImagePool::sample(std::size_t n, std::uint64_t rng_seed) {
  if (n == 0) throw ConfigError("pool sample size must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<torch::Tensor> images;
  ImageBatch out;
  out.domain = source_domain();
  for (std::size_t slot = 0; slot < n; ++slot) {
    bool generated = false;
    if (!buffer_.empty()) {
      if (cfg_.mixing == PoolMixing::alternate) {
        generated = (alternate_counter_++ % 2) == 1;
      } else {
        generated = unit(rng) < cfg_.p_generated;
      }
    }
    if (generated) {
      std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
      images.push_back(buffer_[pick(rng)].to(torch::kCPU));
      out.provenance.push_back(Provenance::generated);
    } else {
      images.push_back(next_dataset_image(rng()));
      out.provenance.push_back(Provenance::dataset);
    }
  }
  out.data = torch::stack(images).contiguous();
  return out;
}

PoolState ImagePool::state() const {
  PoolState s;
  s.buffer.assign(buffer_.begin(), buffer_.end());
  s.dataset_pass = pass_;
  s.dataset_cursor = cursor_;
  s.alternate_counter = alternate_counter_;
  return s;
}

void ImagePool::restore(const PoolState& s) {
  if (s.buffer.size() > cfg_.capacity) throw ConfigError("restored pool buffer exceeds capacity");
  buffer_.clear();
  for (const auto& t : s.buffer) buffer_.push_back(t.to(storage_, torch::kFloat).clone());
  pass_ = s.dataset_pass;
  cursor_ = s.dataset_cursor;
  alternate_counter_ = s.alternate_counter;
  perm_pass_ = ~std::uint64_t{0};
}

ImagePool init_pool(GeneratorRole task, std::shared_ptr<const ImageSource> dataset, std::size_t capacity,
                    double p_generated, std::uint64_t seed) {
  PoolConfig cfg;
  cfg.capacity = capacity;
  cfg.p_generated = p_generated;
  return ImagePool(task, std::move(dataset), cfg, seed);
}

GeneratorRole receiving_pool(GeneratorRole produced_by, TrainingStage stage) noexcept {
  return stage == TrainingStage::stage1 ? produced_by : produced_by.inverse();
}

void route_push(ImagePool& pool_ab, ImagePool& pool_ba, GeneratorRole produced_by, const ImageBatch& images,
                TrainingStage stage) {
  if (pool_ab.task() != GeneratorRole::ab() || pool_ba.task() != GeneratorRole::ba()) {
    throw ContractViolation("route_push expects (I_AB, I_BA) in that order");
  }
  if (!images.all_from(Provenance::generated)) {
    throw ContractViolation("route_push only accepts generated images");
  }
  auto& target = receiving_pool(produced_by, stage) == GeneratorRole::ab() ? pool_ab : pool_ba;
  ImageBatch relabeled{images.data, target.source_domain(), images.provenance};
  target.push(relabeled);
}

}  // namespace transfig
