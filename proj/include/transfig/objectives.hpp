#pragma once

#include <torch/torch.h>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "transfig/discriminator.hpp"
#include "transfig/domain.hpp"
#include "transfig/generator.hpp"

namespace transfig {

struct LossWeights {
  double lambda_adv = 10.0;
  double lambda_rec = 100.0;  // published range is [100, 200]

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class Candidate : std::uint8_t { real_a, real_b, translated_a, translated_b };
enum class Condition : std::uint8_t { a_input, b_input };

// One expectation term of the shared-discriminator objective: which image is
// scored, which generator input it is conditioned on, and its BCE target.
struct DiscriminatorTerm {
  std::string_view name;
  Candidate candidate;
  Condition condition;
  double target;
};

// Order and targets {1,0,0,0,1,1} of the full objective. Translated images
// carry the label of the domain they were translated from.
inline constexpr std::array<DiscriminatorTerm, 6> kSharedDiscriminatorTerms{{
    {"real_b|a'", Candidate::real_b, Condition::a_input, 1.0},
    {"real_a|a'", Candidate::real_a, Condition::a_input, 0.0},
    {"G_AB(a')|a'", Candidate::translated_b, Condition::a_input, 0.0},
    {"real_a|b'", Candidate::real_a, Condition::b_input, 0.0},
    {"real_b|b'", Candidate::real_b, Condition::b_input, 1.0},
    {"G_BA(b')|b'", Candidate::translated_a, Condition::b_input, 1.0},
}};

// full: all six terms. compact: the four-term ablation that drops the real
// images conditioned on an input from their own domain.
enum class DiscriminatorObjective : std::uint8_t { full, compact };

std::vector<DiscriminatorTerm> discriminator_terms(DiscriminatorObjective objective);

struct LossBreakdown {
  double d_total = 0.0;
  std::vector<std::pair<std::string, double>> d_terms;
  double g_ab_adv = 0.0;
  double g_ab_rec = 0.0;
  double g_ba_adv = 0.0;
  double g_ba_rec = 0.0;

  bool all_finite() const;
  // Throws NonFiniteLossError naming the first bad entry.
  void check_finite(double divergence_limit = 1e6) const;
  const double* d_term(std::string_view name) const;
};

struct DiscriminatorInputs {
  torch::Tensor a_input;       // a' drawn from I_AB
  torch::Tensor b_input;       // b' drawn from I_BA
  torch::Tensor a_real;
  torch::Tensor b_real;
  torch::Tensor translated_b;  // G_AB(a')
  torch::Tensor translated_a;  // G_BA(b')
};

struct DiscriminatorLoss {
  torch::Tensor total;
  std::vector<std::pair<DiscriminatorTerm, torch::Tensor>> terms;

  std::vector<std::pair<std::string, double>> term_values() const;
};

// Mean logit-space binary cross-entropy against a constant target.
torch::Tensor logit_bce(const torch::Tensor& logits, double target);

// Mean over terms of per-term patch-mean BCE. Translated images are detached,
// so no gradient reaches the generators.
DiscriminatorLoss discriminator_loss(const Discriminator& d, const DiscriminatorInputs& inputs,
                                     DiscriminatorObjective objective = DiscriminatorObjective::full);

// Loss assembly from already computed per-term patch logits.
DiscriminatorLoss discriminator_loss_from_logits(const std::vector<DiscriminatorTerm>& terms,
                                                 const std::vector<torch::Tensor>& per_term_logits);

// Runs both generators on the pool inputs without recording a graph.
DiscriminatorLoss discriminator_loss(const Discriminator& d, const Generator& g_ab, const Generator& g_ba,
                                     const ImageBatch& a_prime, const ImageBatch& b_prime,
                                     const ImageBatch& a_real, const ImageBatch& b_real,
                                     DiscriminatorObjective objective = DiscriminatorObjective::full);

// Non-saturating generator loss: BCE of D(fake | condition) against the
// label of the role's target domain (1 for AB, 0 for BA).
torch::Tensor generator_adversarial_loss(const Discriminator& d, const torch::Tensor& fake,
                                         const torch::Tensor& condition, GeneratorRole role);

// Mean absolute difference (L1, mean reduction).
torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& input);

torch::Tensor total_generator_loss(const torch::Tensor& adv, const torch::Tensor& rec, const LossWeights& w);
double total_generator_loss(double adv, double rec, const LossWeights& w);

}  // namespace transfig
