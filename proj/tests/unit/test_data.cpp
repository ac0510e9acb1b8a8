#include <gtest/gtest.h>

#include <fstream>

#include "common.hpp"
#include "transfig/data.hpp"
#include "transfig/errors.hpp"

using namespace transfig;

namespace {

void write_images(const std::filesystem::path& dir, int n, std::int64_t size = 8) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    auto img = torch::full({3, size, size}, i * 20, torch::kUInt8);
    write_rgb(dir / ("img_" + std::to_string(i) + ".png"), img);
  }
}

}  // namespace

TEST(Data, PublishedDatasetSizes) {
  auto h = find_known_dataset("horse2zebra");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->train_a, 939u);
  EXPECT_EQ(h->train_b, 1177u);
  auto a = find_known_dataset("apple2orange");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->train_a, 996u);
  EXPECT_EQ(a->train_b, 1020u);
  EXPECT_FALSE(find_known_dataset("cats2dogs"));
}

TEST(Data, LoadUnpairedTagsAndSorts) {
  test::TempDir dir;
  write_images(dir / "trainA", 3);
  write_images(dir / "trainB", 5);
  auto [a, b] = load_unpaired(dir / "trainA", dir / "trainB");
  EXPECT_EQ(a.domain, DomainTag::a());
  EXPECT_EQ(b.domain, DomainTag::b());
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(b.size(), 5u);
  EXPECT_TRUE(std::is_sorted(b.image_paths.begin(), b.image_paths.end()));
}

TEST(Data, CorruptFileSkippedAndCounted) {
  test::TempDir dir;
  write_images(dir / "A", 9);
  std::ofstream(dir / "A" / "broken.png") << "definitely not a png";
  std::ofstream(dir / "A" / "notes.txt") << "ignored";
  LoadStats stats;
  auto ds = load_domain(dir / "A", DomainTag::a(), &stats);
  EXPECT_EQ(ds.size(), 9u);
  EXPECT_EQ(stats.skipped, 1u);
  EXPECT_EQ(stats.warnings.size(), 1u);
  EXPECT_THROW(read_rgb(dir / "A" / "broken.png"), DataCorruptionError);
}

TEST(Data, EmptyOrMissingDirectory) {
  test::TempDir dir;
  std::filesystem::create_directories(dir / "empty");
  EXPECT_THROW(load_domain(dir / "empty", DomainTag::a()), ConfigError);
  EXPECT_THROW(load_domain(dir / "missing", DomainTag::a()), ConfigError);
}

TEST(Data, LoadImagesNormalizesAndResizes) {
  test::TempDir dir;
  write_images(dir / "A", 2, 16);
  auto ds = load_domain(dir / "A", DomainTag::a());
  auto x = load_images(ds, 8);
  EXPECT_EQ(x.sizes(), (std::vector<std::int64_t>{2, 3, 8, 8}));
  EXPECT_NEAR(x[0].max().item<float>(), -1.0f, 1e-6);
  EXPECT_NEAR(x[1].mean().item<float>(), 20 / 127.5 - 1, 1e-5);
}

TEST(Data, DatasetSourceAugmentsDeterministically) {
  test::TempDir dir;
  write_images(dir / "A", 2, 40);
  AugmentConfig aug;
  aug.crop_size = 32;
  DatasetImageSource src(load_domain(dir / "A", DomainTag::a()), aug);
  auto x = src.image(1, 5);
  EXPECT_EQ(x.sizes(), (std::vector<std::int64_t>{3, 32, 32}));
  EXPECT_TRUE(torch::equal(x, src.image(1, 5)));
  EXPECT_EQ(src.domain(), DomainTag::a());
}

TEST(Synthetic, CountsMasksAndDeterminism) {
  test::TempDir dir;
  SyntheticSpec spec;
  spec.n_test_per_domain = 5;
  auto layout = make_synthetic(spec, dir / "one");
  auto count = [](const std::filesystem::path& p) {
    return std::distance(std::filesystem::directory_iterator(p), std::filesystem::directory_iterator{});
  };
  EXPECT_EQ(count(layout.train_a()), 200);
  EXPECT_EQ(count(layout.train_b()), 200);
  EXPECT_EQ(count(layout.test_a()), 5);
  EXPECT_EQ(count(layout.mask_dir("trainA")), 200);
  EXPECT_EQ(count(layout.mask_dir("testB")), 5);

  spec.n_per_domain = 3;
  auto again = make_synthetic(spec, dir / "two");
  for (const auto* sub : {"trainA/00000.png", "trainB/00002.png", "masks/trainB/00001.png"}) {
    std::ifstream x(layout.root / sub, std::ios::binary);
    std::ifstream y(again.root / sub, std::ios::binary);
    ASSERT_TRUE(x && y) << sub;
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(x), {}), std::string(std::istreambuf_iterator<char>(y), {}));
  }
}

TEST(Synthetic, ForegroundColorStatistics) {
  SyntheticSpec spec;
  for (auto domain : {DomainTag::a(), DomainTag::b()}) {
    const auto& color = domain == DomainTag::a() ? spec.fg_color_a : spec.fg_color_b;
    double sum[3] = {0, 0, 0};
    double count = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      auto img = render_synthetic(spec, domain, false, i);
      auto m = img.mask.to(torch::kDouble);
      for (int c = 0; c < 3; ++c) sum[c] += (img.rgb[c].to(torch::kDouble) * m).sum().item<double>();
      count += m.sum().item<double>();
    }
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(sum[c] / count, color[static_cast<std::size_t>(c)], 5.0);
  }
}

TEST(Synthetic, ShapesInsideFrameAndDomainsShareBackgrounds) {
  SyntheticSpec spec;
  double bg_mean[2] = {0, 0};
  for (int d = 0; d < 2; ++d) {
    const auto domain = d ? DomainTag::b() : DomainTag::a();
    for (std::size_t i = 0; i < 40; ++i) {
      auto img = render_synthetic(spec, domain, false, i);
      const auto s = spec.image_size;
      auto border = torch::cat({img.mask[0], img.mask[s - 1], img.mask.select(1, 0), img.mask.select(1, s - 1)});
      EXPECT_FALSE(border.any().item<bool>());
      EXPECT_GT(img.mask.sum().item<int>(), 0);
      auto bg = img.mask.logical_not().unsqueeze(0).expand_as(img.rgb);
      bg_mean[d] += img.rgb.masked_select(bg).to(torch::kDouble).mean().item<double>() / 40;
    }
  }
  EXPECT_NEAR(bg_mean[0], bg_mean[1], 5.0);
}

TEST(Synthetic, InvalidSpec) {
  SyntheticSpec spec;
  spec.fg_color_b = spec.fg_color_a;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = SyntheticSpec{};
  spec.n_per_domain = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}
