#include "transfig/data.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

namespace {

bool looks_like_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".ppm" || ext == ".webp";
}

}  // namespace

torch::Tensor read_rgb(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataCorruptionError("cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return t.permute({2, 0, 1}).contiguous();
}

void write_rgb(const fs::path& path, const torch::Tensor& rgb_bytes) {
  if (rgb_bytes.dim() != 3 || rgb_bytes.size(0) != 3) throw DimensionError("write_rgb expects 3 x h x w");
  auto hwc = rgb_bytes.to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3, hwc.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("failed to write image " + path.string());
}

torch::Tensor read_mask(const fs::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw DataCorruptionError("cannot decode mask " + path.string());
  auto t = torch::from_blob(m.data, {m.rows, m.cols}, torch::kUInt8).clone();
  return t > 127;
}

UnpairedDataset load_domain(const fs::path& dir, DomainTag domain, LoadStats* stats) {
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory does not exist: " + dir.string());
  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && looks_like_image(entry.path())) candidates.push_back(entry.path());
  }
  std::sort(candidates.begin(), candidates.end());

  UnpairedDataset ds;
  ds.domain = domain;
  for (auto& p : candidates) {
    cv::Mat probe = cv::imread(p.string(), cv::IMREAD_REDUCED_COLOR_8);
    if (probe.empty()) {
      const auto msg = "skipping undecodable image " + p.string();
      std::cerr << "warning: " << msg << '\n';
      if (stats) {
        ++stats->skipped;
        stats->warnings.push_back(msg);
      }
      continue;
    }
    ds.image_paths.push_back(std::move(p));
  }
  if (ds.image_paths.empty()) throw ConfigError("no decodable images in " + dir.string());
  return ds;
}

std::pair<UnpairedDataset, UnpairedDataset> load_unpaired(const fs::path& dir_a, const fs::path& dir_b,
                                                          LoadStats* stats_a, LoadStats* stats_b) {
  auto a = load_domain(dir_a, DomainTag::a(), stats_a);
  auto b = load_domain(dir_b, DomainTag::b(), stats_b);
  return {std::move(a), std::move(b)};
}

std::optional<KnownDataset> find_known_dataset(std::string_view name) {
  for (const auto& k : kKnownDatasets) {
    if (k.name == name) return k;
  }
  return std::nullopt;
}

torch::Tensor load_images(const UnpairedDataset& ds, std::int64_t size) {
  std::vector<torch::Tensor> out;
  out.reserve(ds.size());
  for (const auto& p : ds.image_paths) {
    auto batch = normalize(read_rgb(p), ds.domain);
    out.push_back(resize_square(batch.data, size)[0]);
  }
  return torch::stack(out);
}

DatasetImageSource::DatasetImageSource(UnpairedDataset dataset, AugmentConfig augment,
                                       std::size_t cache_budget_bytes)
    : dataset_(std::move(dataset)), augment_(augment), cache_budget_(cache_budget_bytes) {
  augment_.validate();
  if (dataset_.size() == 0) throw ConfigError("dataset image source is empty");
  cache_.resize(dataset_.size());
}

torch::Tensor DatasetImageSource::raw(std::size_t index) const {
  std::lock_guard lock(mutex_);
  if (cache_.at(index).defined()) return cache_[index];
  auto img = read_rgb(dataset_.image_paths[index]);
  const auto bytes = static_cast<std::size_t>(img.numel());
  if (cached_bytes_ + bytes <= cache_budget_) {
    cache_[index] = img;
    cached_bytes_ += bytes;
  }
  return img;
}

torch::Tensor DatasetImageSource::image(std::size_t index, std::uint64_t seed) const {
  auto batch = normalize(raw(index), dataset_.domain);
  return resize_and_crop(batch, augment_, seed).data[0];
}

void SyntheticSpec::validate() const {
  if (n_per_domain == 0) throw ConfigError("synthetic n_per_domain must be >= 1");
  if (image_size < 16) throw ConfigError("synthetic image_size must be >= 16");
  if (fg_color_a == fg_color_b) throw ConfigError("synthetic foreground colors must differ");
}

SyntheticImage render_synthetic(const SyntheticSpec& spec, DomainTag domain, bool test_split, std::size_t index) {
  const auto s = spec.image_size;
  const std::uint64_t split = test_split ? 1 : 0;
  const std::uint64_t dom = domain.label() ? 1 : 0;
  std::mt19937_64 bg_rng(derive_seed(spec.bg_texture_seed, "synthetic-background", {split, dom, index}));
  std::mt19937_64 fg_rng(derive_seed(spec.shape_seed, "synthetic-shape", {split, dom, index}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](std::mt19937_64& r, double lo, double hi) { return lo + (hi - lo) * unit(r); };

  // Background: a muted green palette with slight per-image jitter, two
  // low-frequency waves, pixel noise. The variation is spatial rather than a
  // global color cast, which instance-normalized generators cannot recover.
  const double base[3] = {100 + uniform(bg_rng, -4, 4), 130 + uniform(bg_rng, -4, 4), 80 + uniform(bg_rng, -4, 4)};
  struct Wave {
    double fx, fy, phase, amp;
  };
  Wave waves[2];
  for (auto& w : waves) {
    w = {uniform(bg_rng, 0.5, 2.5), uniform(bg_rng, 0.5, 2.5), uniform(bg_rng, 0, 2 * std::numbers::pi),
         uniform(bg_rng, 8, 20)};
  }

  // Object: circle or square fully inside the frame.
  const bool circle = unit(fg_rng) < 0.5;
  const auto r_min = static_cast<std::int64_t>(std::lround(0.16 * static_cast<double>(s)));
  const auto r_max = static_cast<std::int64_t>(std::lround(0.28 * static_cast<double>(s)));
  const auto radius = std::uniform_int_distribution<std::int64_t>(r_min, r_max)(fg_rng);
  std::uniform_int_distribution<std::int64_t> center(radius + 1, s - 2 - radius);
  const auto cy = center(fg_rng);
  const auto cx = center(fg_rng);
  const auto& fg = domain == DomainTag::a() ? spec.fg_color_a : spec.fg_color_b;

  auto rgb = torch::empty({3, s, s}, torch::kUInt8);
  auto mask = torch::zeros({s, s}, torch::kBool);
  auto px = rgb.accessor<std::uint8_t, 3>();
  auto mk = mask.accessor<bool, 2>();
  for (std::int64_t y = 0; y < s; ++y) {
    for (std::int64_t x = 0; x < s; ++x) {
      const auto dy = y - cy;
      const auto dx = x - cx;
      const bool inside = circle ? (dy * dy + dx * dx <= radius * radius)
                                 : (std::abs(dy) <= radius - 1 && std::abs(dx) <= radius - 1);
      double wave = 0.0;
      for (const auto& w : waves) {
        wave += w.amp * std::sin(2 * std::numbers::pi * (w.fx * x + w.fy * y) / static_cast<double>(s) + w.phase);
      }
      for (int c = 0; c < 3; ++c) {
        const double bg = base[c] + wave + uniform(bg_rng, -3, 3);
        const double fgv = fg[static_cast<std::size_t>(c)] + uniform(fg_rng, -10, 10);
        const double v = inside ? fgv : bg;
        px[c][y][x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
      mk[y][x] = inside;
    }
  }
  return {rgb, mask};
}

DataLayout make_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  spec.validate();
  DataLayout layout{out_dir};
  struct Split {
    bool test;
    std::size_t count;
  };
  for (const Split split : {Split{false, spec.n_per_domain}, Split{true, spec.n_test_per_domain}}) {
    if (split.count == 0) continue;
    for (auto domain : {DomainTag::a(), DomainTag::b()}) {
      const auto dir = split.test ? layout.test_dir(domain) : layout.train_dir(domain);
      const auto mask_dir = layout.mask_dir(dir.filename().string());
      fs::create_directories(dir);
      fs::create_directories(mask_dir);
      for (std::size_t i = 0; i < split.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.png", i);
        auto img = render_synthetic(spec, domain, split.test, i);
        write_rgb(dir / name, img.rgb);
        auto m = (img.mask.to(torch::kUInt8) * 255).contiguous();
        cv::Mat mm(static_cast<int>(m.size(0)), static_cast<int>(m.size(1)), CV_8UC1, m.data_ptr());
        if (!cv::imwrite((mask_dir / name).string(), mm)) {
          throw std::runtime_error("failed to write mask " + (mask_dir / name).string());
        }
      }
    }
  }
  return layout;
}

}  // namespace transfig
