#include "transfig/objectives.hpp"

#include <cmath>

#include "transfig/errors.hpp"

namespace transfig {

void LossWeights::validate() const {
  if (!std::isfinite(lambda_adv) || lambda_adv < 0.0) throw ConfigError("lambda_adv must be finite and >= 0");
  if (!std::isfinite(lambda_rec) || lambda_rec < 0.0) throw ConfigError("lambda_rec must be finite and >= 0");
}

std::vector<DiscriminatorTerm> discriminator_terms(DiscriminatorObjective objective) {
  std::vector<DiscriminatorTerm> out;
  for (const auto& t : kSharedDiscriminatorTerms) {
    const bool own_domain_real =
        (t.candidate == Candidate::real_a && t.condition == Condition::a_input) ||
        (t.candidate == Candidate::real_b && t.condition == Condition::b_input);
    if (objective == DiscriminatorObjective::compact && own_domain_real) continue;
    out.push_back(t);
  }
  return out;
}

bool LossBreakdown::all_finite() const {
  if (!std::isfinite(d_total) || !std::isfinite(g_ab_adv) || !std::isfinite(g_ab_rec) ||
      !std::isfinite(g_ba_adv) || !std::isfinite(g_ba_rec)) {
    return false;
  }
  for (const auto& [name, v] : d_terms) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void LossBreakdown::check_finite(double divergence_limit) const {
  auto check = [&](const std::string& name, double v) {
    if (!std::isfinite(v) || std::abs(v) > divergence_limit) throw NonFiniteLossError(name, v);
  };
  for (const auto& [name, v] : d_terms) check("d:" + name, v);
  check("d_total", d_total);
  check("g_ab_adv", g_ab_adv);
  check("g_ab_rec", g_ab_rec);
  check("g_ba_adv", g_ba_adv);
  check("g_ba_rec", g_ba_rec);
}

const double* LossBreakdown::d_term(std::string_view name) const {
  for (const auto& [n, v] : d_terms) {
    if (n == name) return &v;
  }
  return nullptr;
}

std::vector<std::pair<std::string, double>> DiscriminatorLoss::term_values() const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(terms.size());
  for (const auto& [spec, value] : terms) out.emplace_back(std::string(spec.name), value.item<double>());
  return out;
}

torch::Tensor logit_bce(const torch::Tensor& logits, double target) {
  return torch::binary_cross_entropy_with_logits(logits, torch::full_like(logits, target));
}

DiscriminatorLoss discriminator_loss(const Discriminator& d, const DiscriminatorInputs& in,
                                     DiscriminatorObjective objective) {
  const auto terms = discriminator_terms(objective);
  auto candidate_of = [&](Candidate c) -> torch::Tensor {
    switch (c) {
      case Candidate::real_a: return in.a_real;
      case Candidate::real_b: return in.b_real;
      case Candidate::translated_a: return in.translated_a.detach();
      case Candidate::translated_b: return in.translated_b.detach();
    }
    throw ContractViolation("unknown discriminator candidate");
  };

  // Instance norm is per sample, so scoring all terms in one batch is the
  // same as scoring them one by one.
  std::vector<torch::Tensor> candidates;
  std::vector<torch::Tensor> conditions;
  for (const auto& t : terms) {
    auto cand = candidate_of(t.candidate);
    auto cond = t.condition == Condition::a_input ? in.a_input : in.b_input;
    if (!cand.defined() || !cond.defined() || !cand.sizes().equals(cond.sizes())) {
      throw DimensionError(std::string("discriminator term '") + std::string(t.name) +
                           "' has mismatched or missing candidate/condition tensors");
    }
    candidates.push_back(cand);
    conditions.push_back(cond);
  }
  const auto logits = d.discriminate(torch::cat(candidates, 0), torch::cat(conditions, 0)).logits;
  return discriminator_loss_from_logits(terms, logits.chunk(static_cast<std::int64_t>(terms.size()), 0));
}

DiscriminatorLoss discriminator_loss_from_logits(const std::vector<DiscriminatorTerm>& terms,
                                                 const std::vector<torch::Tensor>& per_term) {
  if (terms.size() != per_term.size() || terms.empty()) {
    throw DimensionError("need one logit tensor per discriminator term");
  }
  DiscriminatorLoss out;
  std::vector<torch::Tensor> values;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    auto v = logit_bce(per_term[i], terms[i].target);
    const double x = v.item<double>();
    if (!std::isfinite(x)) throw NonFiniteLossError("d:" + std::string(terms[i].name), x);
    out.terms.emplace_back(terms[i], v);
    values.push_back(v);
  }
  out.total = torch::stack(values).mean();
  return out;
}

DiscriminatorLoss discriminator_loss(const Discriminator& d, const Generator& g_ab, const Generator& g_ba,
                                     const ImageBatch& a_prime, const ImageBatch& b_prime,
                                     const ImageBatch& a_real, const ImageBatch& b_real,
                                     DiscriminatorObjective objective) {
  DiscriminatorInputs in{a_prime.data, b_prime.data, a_real.data, b_real.data, {}, {}};
  {
    torch::NoGradGuard no_grad;
    in.translated_b = g_ab.forward(a_prime).data;
    in.translated_a = g_ba.forward(b_prime).data;
  }
  return discriminator_loss(d, in, objective);
}

torch::Tensor generator_adversarial_loss(const Discriminator& d, const torch::Tensor& fake,
                                         const torch::Tensor& condition, GeneratorRole role) {
  return logit_bce(d.discriminate(fake, condition).logits, role.target().label_value());
}

torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& input) {
  if (!output.sizes().equals(input.sizes())) {
    throw DimensionError("reconstruction loss needs identical shapes, got " +
                         c10::str(output.sizes()) + " vs " + c10::str(input.sizes()));
  }
  return (output - input).abs().mean();
}

torch::Tensor total_generator_loss(const torch::Tensor& adv, const torch::Tensor& rec, const LossWeights& w) {
  return w.lambda_adv * adv + w.lambda_rec * rec;
}

double total_generator_loss(double adv, double rec, const LossWeights& w) {
  return w.lambda_adv * adv + w.lambda_rec * rec;
}

}  // namespace transfig
