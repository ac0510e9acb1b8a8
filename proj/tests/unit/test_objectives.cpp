#include <gtest/gtest.h>

#include <cmath>

#include "common.hpp"
#include "transfig/discriminator.hpp"
#include "transfig/errors.hpp"
#include "transfig/generator.hpp"
#include "transfig/objectives.hpp"

using namespace transfig;

namespace {

// Hand-set logits shared with tests/oracles/losses.py.
torch::Tensor fixture_logits(int term) {
  auto z = torch::empty({2, 1, 2, 2}, torch::kDouble);
  auto* p = z.data_ptr<double>();
  for (int i = 0; i < 8; ++i) p[i] = std::round(3.0 * std::sin(1.7 * term + 0.9 * i + 0.3) * 1e6) / 1e6;
  return z;
}

std::vector<torch::Tensor> constant_logits(std::size_t terms, const std::vector<double>& values) {
  std::vector<torch::Tensor> out;
  for (std::size_t t = 0; t < terms; ++t) out.push_back(torch::full({2, 1, 2, 2}, values[t], torch::kDouble));
  return out;
}

// Discriminator whose every patch logit equals `value`.
Discriminator constant_discriminator(double value) {
  auto d = build_discriminator(DiscriminatorConfig::miniature(), 0);
  torch::NoGradGuard ng;
  auto params = d.parameters();
  for (auto& p : params) p.zero_();
  params.back().fill_(value);
  return d;
}

}  // namespace

TEST(Objectives, TermTableOrderAndTargets) {
  const auto terms = discriminator_terms(DiscriminatorObjective::full);
  ASSERT_EQ(terms.size(), 6u);
  const std::vector<std::string> names{"real_b|a'", "real_a|a'", "G_AB(a')|a'", "real_a|b'", "real_b|b'",
                                       "G_BA(b')|b'"};
  const std::vector<double> targets{1, 0, 0, 0, 1, 1};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(std::string(terms[i].name), names[i]);
    EXPECT_EQ(terms[i].target, targets[i]);
  }
}

TEST(Objectives, GeneratedImagesCarrySourceLabelInD) {
  for (const auto& t : discriminator_terms(DiscriminatorObjective::full)) {
    if (t.candidate == Candidate::translated_b) EXPECT_EQ(t.target, DomainTag::a().label_value());
    if (t.candidate == Candidate::translated_a) EXPECT_EQ(t.target, DomainTag::b().label_value());
  }
}

TEST(Objectives, CompactTermsDropOwnDomainReals) {
  const auto terms = discriminator_terms(DiscriminatorObjective::compact);
  ASSERT_EQ(terms.size(), 4u);
  EXPECT_EQ(std::string(terms[0].name), "real_b|a'");
  EXPECT_EQ(std::string(terms[1].name), "G_AB(a')|a'");
  EXPECT_EQ(std::string(terms[2].name), "real_a|b'");
  EXPECT_EQ(std::string(terms[3].name), "G_BA(b')|b'");
}

TEST(Objectives, ZeroLogitsGiveLn2) {
  auto loss = discriminator_loss_from_logits(discriminator_terms(DiscriminatorObjective::full),
                                             constant_logits(6, {0, 0, 0, 0, 0, 0}));
  for (const auto& [name, v] : loss.term_values()) EXPECT_NEAR(v, std::log(2.0), 1e-12) << name;
  EXPECT_NEAR(loss.total.item<double>(), std::log(2.0), 1e-12);
}

TEST(Objectives, SaturatedCorrectLogits) {
  auto loss = discriminator_loss_from_logits(discriminator_terms(DiscriminatorObjective::full),
                                             constant_logits(6, {20, -20, -20, -20, 20, 20}));
  EXPECT_LE(loss.total.item<double>(), 1e-8);
}

// Values from tests/oracles/losses.py.
TEST(Objectives, HandSetLogitsMatchOracle) {
  std::vector<torch::Tensor> logits;
  for (int t = 0; t < 6; ++t) logits.push_back(fixture_logits(t));
  auto loss = discriminator_loss_from_logits(discriminator_terms(DiscriminatorObjective::full), logits);
  const double terms[] = {1.0449463207638947, 1.3553319020795713, 1.0249039983454502,
                          1.0137732272892237, 1.0149646855606538, 1.0223938971439126};
  for (int t = 0; t < 6; ++t) EXPECT_NEAR(loss.terms[t].second.item<double>(), terms[t], 1e-12);
  EXPECT_NEAR(loss.total.item<double>(), 1.0793856718637844, 1e-12);

  std::vector<torch::Tensor> compact{logits[0], logits[2], logits[3], logits[5]};
  auto c = discriminator_loss_from_logits(discriminator_terms(DiscriminatorObjective::compact), compact);
  EXPECT_NEAR(c.total.item<double>(), 1.0265043608856204, 1e-12);
}

TEST(Objectives, LogitBceMatchesOracle) {
  EXPECT_NEAR(logit_bce(fixture_logits(0), 1.0).item<double>(), 1.0449463207638947, 1e-12);
  EXPECT_NEAR(logit_bce(fixture_logits(0), 0.0).item<double>(), 1.1607514457638946, 1e-12);
  EXPECT_TRUE(std::isfinite(logit_bce(torch::full({1}, 1e4, torch::kDouble), 0.0).item<double>()));
}

TEST(Objectives, GeneratorAdversarialConstantLogits) {
  auto zero = constant_discriminator(0.0);
  auto x = test::rand_images(2, 32, 1);
  EXPECT_NEAR(generator_adversarial_loss(zero, x, x, GeneratorRole::ab()).item<double>(), std::log(2.0), 1e-6);
  auto neg = constant_discriminator(-20.0);
  EXPECT_LE(generator_adversarial_loss(neg, x, x, GeneratorRole::ba()).item<double>(), 1e-8);
  EXPECT_GT(generator_adversarial_loss(neg, x, x, GeneratorRole::ab()).item<double>(), 19.0);
}

TEST(Objectives, GeneratorAdversarialUsesTargetLabel) {
  auto d = build_discriminator(DiscriminatorConfig::miniature(), 3);
  auto fake = test::rand_images(2, 32, 4);
  auto cond = test::rand_images(2, 32, 5);
  auto logits = d.discriminate(fake, cond).logits;
  EXPECT_NEAR(generator_adversarial_loss(d, fake, cond, GeneratorRole::ab()).item<double>(),
              logit_bce(logits, 1.0).item<double>(), 1e-6);
  EXPECT_NEAR(generator_adversarial_loss(d, fake, cond, GeneratorRole::ba()).item<double>(),
              logit_bce(logits, 0.0).item<double>(), 1e-6);
}

TEST(Objectives, ReconstructionLoss) {
  auto x = test::rand_images(2, 8, 1);
  EXPECT_EQ(reconstruction_loss(x, x).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(reconstruction_loss(torch::ones({2, 3, 4, 4}), torch::zeros({2, 3, 4, 4})).item<double>(), 1.0);
  EXPECT_THROW(reconstruction_loss(torch::ones({2, 3, 4, 4}), torch::zeros({2, 3, 4, 2})), DimensionError);
}

// Value from tests/oracles/losses.py.
TEST(Objectives, ReconstructionMatchesOracle) {
  auto out = torch::empty({24}, torch::kDouble);
  auto in = torch::empty({24}, torch::kDouble);
  for (int i = 0; i < 24; ++i) {
    out[i] = std::round(std::cos(0.37 * i + 1.1 * 0) * 0.9 * 1e6) / 1e6;
    in[i] = std::round(std::cos(0.37 * i + 1.1 * 1) * 0.9 * 1e6) / 1e6;
  }
  EXPECT_NEAR(reconstruction_loss(out.view({1, 2, 3, 4}), in.view({1, 2, 3, 4})).item<double>(), 0.62702975, 1e-12);
}

TEST(Objectives, TotalGeneratorLoss) {
  LossWeights w;
  EXPECT_DOUBLE_EQ(total_generator_loss(0.5, 0.1, w), 15.0);
  EXPECT_DOUBLE_EQ(total_generator_loss(0.0, 0.0, w), 0.0);
  w.lambda_rec = 200.0;
  EXPECT_NEAR(total_generator_loss(std::log(2.0), 1.0, w), 206.931, 1e-3);
  EXPECT_NEAR(total_generator_loss(torch::tensor(0.5), torch::tensor(0.1), LossWeights{}).item<double>(), 15.0, 1e-5);
}

TEST(Objectives, WeightValidation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.lambda_adv = -1;
  EXPECT_THROW(w.validate(), ConfigError);
  w = LossWeights{};
  w.lambda_rec = std::nan("");
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(Objectives, NoGeneratorGradientThroughDiscriminatorLoss) {
  auto g_ab = build_generator(GeneratorConfig::miniature(GeneratorArch::resnet), GeneratorRole::ab(), 1);
  auto g_ba = build_generator(GeneratorConfig::miniature(GeneratorArch::resnet), GeneratorRole::ba(), 2);
  auto d = build_discriminator(DiscriminatorConfig::miniature(), 3);
  auto a = ImageBatch::uniform(test::rand_images(2, 32, 1), DomainTag::a(), Provenance::dataset);
  auto b = ImageBatch::uniform(test::rand_images(2, 32, 2), DomainTag::b(), Provenance::dataset);
  auto loss = discriminator_loss(d, g_ab, g_ba, a, b, a, b);
  loss.total.backward();
  for (const auto* g : {&g_ab, &g_ba}) {
    for (const auto& p : g->parameters()) {
      EXPECT_TRUE(!p.grad().defined() || p.grad().abs().sum().item<double>() == 0.0);
    }
  }
}

TEST(Objectives, InvariantToBatchPermutation) {
  auto d = build_discriminator(DiscriminatorConfig::miniature(), 3);
  d.train(false);
  DiscriminatorInputs in{test::rand_images(4, 32, 1), test::rand_images(4, 32, 2), test::rand_images(4, 32, 3),
                         test::rand_images(4, 32, 4), test::rand_images(4, 32, 5), test::rand_images(4, 32, 6)};
  auto perm = torch::tensor({2, 0, 3, 1}, torch::kLong);
  DiscriminatorInputs p{in.a_input.index_select(0, perm),      in.b_input.index_select(0, perm),
                        in.a_real.index_select(0, perm),       in.b_real.index_select(0, perm),
                        in.translated_b.index_select(0, perm), in.translated_a.index_select(0, perm)};
  torch::NoGradGuard ng;
  EXPECT_NEAR(discriminator_loss(d, in).total.item<double>(), discriminator_loss(d, p).total.item<double>(), 1e-6);
  auto x = in.a_input;
  EXPECT_NEAR(generator_adversarial_loss(d, in.translated_b, x, GeneratorRole::ab()).item<double>(),
              generator_adversarial_loss(d, p.translated_b, p.a_input, GeneratorRole::ab()).item<double>(), 1e-6);
}

TEST(Objectives, BreakdownFiniteChecks) {
  LossBreakdown b;
  b.d_terms = {{"real_b|a'", 0.5}};
  EXPECT_TRUE(b.all_finite());
  EXPECT_NO_THROW(b.check_finite());
  b.g_ba_rec = std::nan("");
  EXPECT_FALSE(b.all_finite());
  try {
    b.check_finite();
    FAIL();
  } catch (const NonFiniteLossError& e) {
    EXPECT_EQ(e.term(), "g_ba_rec");
  }
  b.g_ba_rec = 2e6;
  EXPECT_THROW(b.check_finite(), NonFiniteLossError);
  ASSERT_NE(b.d_term("real_b|a'"), nullptr);
  EXPECT_EQ(b.d_term("nope"), nullptr);
}
