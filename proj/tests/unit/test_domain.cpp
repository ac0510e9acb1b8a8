#include <gtest/gtest.h>

#include "common.hpp"
#include "transfig/domain.hpp"
#include "transfig/errors.hpp"

using namespace transfig;

TEST(DomainTag, LabelsAreFixed) {
  EXPECT_FALSE(DomainTag::a().label());
  EXPECT_TRUE(DomainTag::b().label());
  EXPECT_EQ(DomainTag::a().label_value(), 0.0);
  EXPECT_EQ(DomainTag::b().label_value(), 1.0);
  EXPECT_EQ(DomainTag::a().opposite(), DomainTag::b());
  EXPECT_EQ(DomainTag::b().opposite(), DomainTag::a());
}

TEST(Normalize, Endpoints) {
  auto raw = torch::tensor({0.0f, 127.5f, 255.0f}).view({1, 1, 1, 3});
  auto out = normalize(raw, DomainTag::a()).data;
  EXPECT_FLOAT_EQ(out.view(-1)[0].item<float>(), -1.0f);
  EXPECT_FLOAT_EQ(out.view(-1)[1].item<float>(), 0.0f);
  EXPECT_FLOAT_EQ(out.view(-1)[2].item<float>(), 1.0f);
}

TEST(Normalize, RejectsNonFinite) {
  auto raw = torch::tensor({0.0f, std::nanf("")}).view({1, 1, 1, 2});
  EXPECT_THROW(normalize(raw, DomainTag::a()), DataCorruptionError);
  auto inf = torch::tensor({0.0f, INFINITY}).view({1, 1, 1, 2});
  EXPECT_THROW(normalize(inf, DomainTag::a()), DataCorruptionError);
}

TEST(Denormalize, EndpointsAndClampCounter) {
  auto x = torch::tensor({-1.0f, 1.0f, 1.5f, -3.0f}).view({1, 1, 1, 4});
  auto out = denormalize(x);
  auto b = out.bytes.view(-1);
  EXPECT_EQ(b[0].item<int>(), 0);
  EXPECT_EQ(b[1].item<int>(), 255);
  EXPECT_EQ(b[2].item<int>(), 255);
  EXPECT_EQ(b[3].item<int>(), 0);
  EXPECT_EQ(out.clamped, 2);
}

TEST(Denormalize, RoundTripWithinOneLevel) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(3);
  auto raw = torch::randint(0, 256, {4, 3, 16, 16}, gen, torch::kUInt8);
  auto back = denormalize(normalize(raw, DomainTag::b())).bytes;
  EXPECT_LE((back.to(torch::kInt) - raw.to(torch::kInt)).abs().max().item<int>(), 1);
}

TEST(Denormalize, RoundTripAllByteValues) {
  auto raw = torch::arange(256, torch::kInt).to(torch::kUInt8).view({1, 1, 16, 16});
  auto back = denormalize(normalize(raw, DomainTag::a())).bytes;
  EXPECT_LE((back.to(torch::kInt) - raw.to(torch::kInt)).abs().max().item<int>(), 1);
}

TEST(AugmentConfig, ResizedSizeRoundsDown) {
  AugmentConfig c;
  c.crop_size = 128;
  EXPECT_EQ(c.resized_size(), 144);
  c.crop_size = 256;
  EXPECT_EQ(c.resized_size(), 288);
  c.crop_size = 30;
  EXPECT_EQ(c.resized_size(), 33);  // 33.75
}

TEST(AugmentConfig, FactorBelowOneRejected) {
  AugmentConfig c;
  c.resize_factor = 0.9;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ResizeAndCrop, OutputSizes) {
  for (std::int64_t crop : {128, 256}) {
    AugmentConfig c;
    c.crop_size = crop;
    auto in = ImageBatch::uniform(test::rand_images(2, crop, 1), DomainTag::a(), Provenance::dataset);
    auto out = resize_and_crop(in, c, 7);
    EXPECT_EQ(out.data.sizes(), (std::vector<std::int64_t>{2, 3, crop, crop}));
  }
}

TEST(ResizeAndCrop, UnitFactorIsIdentity) {
  AugmentConfig c;
  c.crop_size = 32;
  c.resize_factor = 1.0;
  auto in = ImageBatch::uniform(test::rand_images(3, 32, 2), DomainTag::b(), Provenance::dataset);
  auto out = resize_and_crop(in, c, 11);
  EXPECT_TRUE(torch::allclose(out.data, in.data, 0, 1e-6));
}

TEST(ResizeAndCrop, DeterministicAndKeepsDomain) {
  AugmentConfig c;
  c.crop_size = 32;
  c.flip = true;
  auto in = ImageBatch::uniform(test::rand_images(4, 40, 3), DomainTag::b(), Provenance::generated);
  auto x = resize_and_crop(in, c, 5);
  auto y = resize_and_crop(in, c, 5);
  EXPECT_TRUE(torch::equal(x.data, y.data));
  EXPECT_EQ(x.domain, DomainTag::b());
  EXPECT_TRUE(x.all_from(Provenance::generated));
  auto z = resize_and_crop(in, c, 6);
  EXPECT_FALSE(torch::equal(x.data, z.data));
}

TEST(ResizeAndCrop, CropLargerThanResizeRejected) {
  AugmentConfig c;
  c.crop_size = 64;
  c.resize_factor = 0.5;
  auto in = ImageBatch::uniform(test::rand_images(1, 64, 3), DomainTag::a(), Provenance::dataset);
  EXPECT_THROW(resize_and_crop(in, c, 1), ConfigError);
}

TEST(ImageBatch, ShapeChecks) {
  ImageBatch b;
  b.data = torch::zeros({2, 3, 8});
  b.provenance = {Provenance::dataset, Provenance::dataset};
  EXPECT_THROW(b.check_shape(), DimensionError);
  b.data = torch::zeros({2, 3, 8, 8});
  b.provenance = {Provenance::dataset};
  EXPECT_THROW(b.check_shape(), DimensionError);
}
