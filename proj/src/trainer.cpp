#include "transfig/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

namespace {

std::unique_ptr<torch::optim::Optimizer> make_optimizer(const TrainConfig& cfg, std::vector<torch::Tensor> params) {
  if (cfg.optimizer == OptimizerKind::adam) {
    return std::make_unique<torch::optim::Adam>(
        std::move(params), torch::optim::AdamOptions(cfg.lr).betas({cfg.adam_beta1, cfg.adam_beta2}));
  }
  return std::make_unique<torch::optim::RMSprop>(std::move(params), torch::optim::RMSpropOptions(cfg.lr));
}

TrainState make_state(const TrainConfig& cfg, const std::shared_ptr<const ImageSource>& a,
                      const std::shared_ptr<const ImageSource>& b) {
  if (!a || !b) throw ConfigError("trainer needs both domain image sources");
  if (a->domain() != DomainTag::a() || b->domain() != DomainTag::b()) {
    throw ConfigError("trainer sources must be tagged A and B respectively");
  }
  return TrainState{
      cfg,
      build_generator(cfg.generator, GeneratorRole::ab(), derive_seed(cfg.seed, "g_ab")),
      build_generator(cfg.generator, GeneratorRole::ba(), derive_seed(cfg.seed, "g_ba")),
      build_discriminator(cfg.discriminator, derive_seed(cfg.seed, "d_shared")),
      ImagePool(GeneratorRole::ab(), a, cfg.pool, derive_seed(cfg.seed, "pool_ab")),
      ImagePool(GeneratorRole::ba(), b, cfg.pool, derive_seed(cfg.seed, "pool_ba")),
      0,
      0,
      TrainingStage::stage1,
      nullptr,
      nullptr,
      nullptr,
      0,
      0,
  };
}

// Freezes a module's parameters for the lifetime of the guard.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<torch::Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.requires_grad_(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.requires_grad_(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

void save_module(CheckpointFile& c, const std::string& prefix, torch::nn::Module& m) {
  for (const auto& p : m.named_parameters(true)) c.add(prefix + "/" + p.key(), p.value());
  for (const auto& b : m.named_buffers(true)) c.add(prefix + "/buffer/" + b.key(), b.value());
}

void load_module(const CheckpointFile& c, const std::string& prefix, torch::nn::Module& m) {
  torch::NoGradGuard no_grad;
  auto copy = [&](const std::string& name, torch::Tensor& dst) {
    const auto& src = c.get(name);
    if (!src.sizes().equals(dst.sizes())) {
      throw IncompatibleCheckpointError("array '" + name + "' has shape " + c10::str(src.sizes()) +
                                        ", the network expects " + c10::str(dst.sizes()));
    }
    dst.copy_(src);
  };
  for (auto& p : m.named_parameters(true)) copy(prefix + "/" + p.key(), p.value());
  for (auto& b : m.named_buffers(true)) copy(prefix + "/buffer/" + b.key(), b.value());
}

void save_optimizer(CheckpointFile& c, const std::string& prefix, torch::optim::Optimizer& opt, OptimizerKind kind) {
  const auto& params = opt.param_groups().at(0).params();
  auto& states = opt.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = states.find(params[i].unsafeGetTensorImpl());
    if (it == states.end()) continue;
    const auto base = prefix + "/" + std::to_string(i) + "/";
    if (kind == OptimizerKind::adam) {
      auto& st = static_cast<torch::optim::AdamParamState&>(*it->second);
      c.add(base + "step", torch::tensor(st.step(), torch::kLong));
      c.add(base + "exp_avg", st.exp_avg());
      c.add(base + "exp_avg_sq", st.exp_avg_sq());
    } else {
      auto& st = static_cast<torch::optim::RMSpropParamState&>(*it->second);
      c.add(base + "step", torch::tensor(st.step(), torch::kLong));
      c.add(base + "square_avg", st.square_avg());
      if (st.momentum_buffer().defined()) c.add(base + "momentum_buffer", st.momentum_buffer());
      if (st.grad_avg().defined()) c.add(base + "grad_avg", st.grad_avg());
    }
  }
}

void load_optimizer(const CheckpointFile& c, const std::string& prefix, torch::optim::Optimizer& opt,
                    OptimizerKind kind) {
  const auto& params = opt.param_groups().at(0).params();
  auto& states = opt.state();
  states.clear();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto base = prefix + "/" + std::to_string(i) + "/";
    if (!c.has(base + "step")) continue;
    const auto& p = params[i];
    auto like = [&](const std::string& name) { return c.get(base + name).to(p.options()).clone(); };
    const auto step = c.get(base + "step").item<std::int64_t>();
    if (kind == OptimizerKind::adam) {
      auto st = std::make_unique<torch::optim::AdamParamState>();
      st->step(step);
      st->exp_avg(like("exp_avg"));
      st->exp_avg_sq(like("exp_avg_sq"));
      states[p.unsafeGetTensorImpl()] = std::move(st);
    } else {
      auto st = std::make_unique<torch::optim::RMSpropParamState>();
      st->step(step);
      st->square_avg(like("square_avg"));
      if (c.has(base + "momentum_buffer")) st->momentum_buffer(like("momentum_buffer"));
      if (c.has(base + "grad_avg")) st->grad_avg(like("grad_avg"));
      states[p.unsafeGetTensorImpl()] = std::move(st);
    }
  }
}

void save_pool(CheckpointFile& c, nlohmann::json& header, const std::string& name, const ImagePool& pool) {
  const auto st = pool.state();
  header["pools"][name] = {{"pass", st.dataset_pass},
                           {"cursor", st.dataset_cursor},
                           {"alternate_counter", st.alternate_counter},
                           {"buffered", st.buffer.size()}};
  if (!st.buffer.empty()) c.add(name + "/buffer", torch::stack(st.buffer));
}

void load_pool(const CheckpointFile& c, const std::string& name, ImagePool& pool) {
  const auto& h = c.header.at("pools").at(name);
  PoolState st;
  st.dataset_pass = h.at("pass").get<std::uint64_t>();
  st.dataset_cursor = h.at("cursor").get<std::uint64_t>();
  st.alternate_counter = h.at("alternate_counter").get<std::uint64_t>();
  const auto buffered = h.at("buffered").get<std::size_t>();
  if (buffered > 0) {
    const auto& stacked = c.get(name + "/buffer");
    if (static_cast<std::size_t>(stacked.size(0)) != buffered) {
      throw CheckpointError("pool '" + name + "' buffer count disagrees with its header");
    }
    for (std::int64_t i = 0; i < stacked.size(0); ++i) st.buffer.push_back(stacked[i]);
  }
  pool.restore(st);
}

void save_rng(CheckpointFile& c, const std::string& prefix, const Generator& g) {
  const auto states = g.rng_states();
  for (std::size_t i = 0; i < states.size(); ++i) c.add(prefix + "/rng/" + std::to_string(i), states[i]);
}

void load_rng(const CheckpointFile& c, const std::string& prefix, const Generator& g) {
  std::vector<torch::Tensor> states;
  for (std::size_t i = 0;; ++i) {
    const auto name = prefix + "/rng/" + std::to_string(i);
    if (!c.has(name)) break;
    states.push_back(c.get(name));
  }
  g.set_rng_states(states);
}

TrainConfig config_from_header(const CheckpointFile& ckpt) {
  if (ckpt.header.value("format", "") != "transfig-train-state") {
    throw IncompatibleCheckpointError("checkpoint does not hold a training state");
  }
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_json(ckpt.header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header lacks a config: ") + e.what());
  }
  if (ckpt.header.value("config_hash", std::string{}) != std::to_string(cfg.hash())) {
    throw CheckpointError("checkpoint config hash does not match its config");
  }
  return cfg;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, std::shared_ptr<const ImageSource> source_a,
                 std::shared_ptr<const ImageSource> source_b)
    : state_(make_state((cfg.validate(), cfg), source_a, source_b)),
      source_a_(std::move(source_a)),
      source_b_(std::move(source_b)),
      device_(state_.config.device) {
  const auto& c = state_.config;
  const auto larger = static_cast<std::int64_t>(std::max(source_a_->size(), source_b_->size()));
  steps_per_epoch_ = (larger + c.batch_size - 1) / c.batch_size;
  state_.g_ab.net().to(device_);
  state_.g_ba.net().to(device_);
  state_.d_shared.net().to(device_);
  state_.opt_d = make_optimizer(c, state_.d_shared.parameters());
  state_.opt_g_ab = make_optimizer(c, state_.g_ab.parameters());
  state_.opt_g_ba = make_optimizer(c, state_.g_ba.parameters());
  sync_schedule();
}

std::int64_t Trainer::total_steps() const noexcept {
  const auto& c = state_.config;
  const auto by_epochs = c.total_epochs * steps_per_epoch_;
  return c.max_steps > 0 ? std::min(c.max_steps, by_epochs) : by_epochs;
}

void Trainer::sync_schedule() {
  state_.epoch = state_.step / steps_per_epoch_;
  const auto last_epoch = state_.config.total_epochs - 1;
  state_.stage = select_stage(std::min(state_.epoch, last_epoch), state_.config);
}

ImageBatch Trainer::real_batch(DomainTag domain, std::int64_t step) const {
  const auto& src = domain == DomainTag::a() ? *source_a_ : *source_b_;
  const auto& cfg = state_.config;
  const auto stream = domain == DomainTag::a() ? "real-a" : "real-b";
  const auto n = static_cast<std::uint64_t>(src.size());
  std::vector<torch::Tensor> images;
  std::uint64_t cached_pass = ~std::uint64_t{0};
  std::vector<std::size_t> perm;
  for (std::int64_t j = 0; j < cfg.batch_size; ++j) {
    const auto pos = static_cast<std::uint64_t>(step * cfg.batch_size + j);
    const auto pass = pos / n;
    if (pass != cached_pass) {
      perm = seeded_permutation(n, derive_seed(cfg.seed, stream, {pass}));
      cached_pass = pass;
    }
    const auto aug = derive_seed(cfg.seed, std::string(stream) + "-aug",
                                 {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(j)});
    images.push_back(src.image(perm[pos % n], aug));
  }
  return ImageBatch::uniform(torch::stack(images), domain, Provenance::dataset);
}

LossBreakdown Trainer::train_next() {
  const auto step = state_.step;
  return train_step(real_batch(DomainTag::a(), step), real_batch(DomainTag::b(), step));
}

LossBreakdown Trainer::train_step(const ImageBatch& a_real_in, const ImageBatch& b_real_in) {
  auto& s = state_;
  const auto& cfg = s.config;
  a_real_in.check_shape();
  b_real_in.check_shape();
  if (a_real_in.domain != DomainTag::a() || b_real_in.domain != DomainTag::b()) {
    throw ContractViolation("train_step expects a domain-A batch and a domain-B batch");
  }
  if (a_real_in.size() != b_real_in.size()) {
    throw DimensionError("real batches differ on the batch axis (0)");
  }
  const auto n = static_cast<std::size_t>(a_real_in.size());
  const auto step = static_cast<std::uint64_t>(s.step);

  auto a_prime = s.pool_ab.sample(n, derive_seed(cfg.seed, "pool-sample-ab", {step}));
  auto b_prime = s.pool_ba.sample(n, derive_seed(cfg.seed, "pool-sample-ba", {step}));
  s.inputs_seen += static_cast<std::int64_t>(2 * n);
  s.generated_inputs_seen += a_prime.count_from(Provenance::generated) + b_prime.count_from(Provenance::generated);

  auto to_dev = [&](const torch::Tensor& t) { return t.to(device_); };
  a_prime.data = to_dev(a_prime.data);
  b_prime.data = to_dev(b_prime.data);
  const auto a_real = to_dev(a_real_in.data);
  const auto b_real = to_dev(b_real_in.data);

  s.g_ab.train(true);
  s.g_ba.train(true);
  s.d_shared.train(true);

  // b* = G_AB(a'), a* = G_BA(b')
  const auto translated_b = s.g_ab.forward(a_prime);
  const auto translated_a = s.g_ba.forward(b_prime);

  LossBreakdown out;
  s.opt_d->zero_grad();
  auto d_loss = discriminator_loss(
      s.d_shared,
      DiscriminatorInputs{a_prime.data, b_prime.data, a_real, b_real, translated_b.data, translated_a.data},
      cfg.discriminator_objective);
  out.d_terms = d_loss.term_values();
  out.d_total = d_loss.total.item<double>();
  if (!std::isfinite(out.d_total) || std::abs(out.d_total) > 1e6) throw NonFiniteLossError("d_total", out.d_total);
  d_loss.total.backward();
  s.opt_d->step();

  {
    FreezeGuard frozen(s.d_shared.parameters());
    s.opt_g_ab->zero_grad();
    s.opt_g_ba->zero_grad();
    const auto adv_ab = generator_adversarial_loss(s.d_shared, translated_b.data, a_prime.data, GeneratorRole::ab());
    const auto rec_ab = reconstruction_loss(translated_b.data, a_prime.data);
    const auto adv_ba = generator_adversarial_loss(s.d_shared, translated_a.data, b_prime.data, GeneratorRole::ba());
    const auto rec_ba = reconstruction_loss(translated_a.data, b_prime.data);
    out.g_ab_adv = adv_ab.item<double>();
    out.g_ab_rec = rec_ab.item<double>();
    out.g_ba_adv = adv_ba.item<double>();
    out.g_ba_rec = rec_ba.item<double>();
    out.check_finite();
    const auto g_total =
        total_generator_loss(adv_ab, rec_ab, cfg.weights) + total_generator_loss(adv_ba, rec_ba, cfg.weights);
    g_total.backward();
    s.opt_g_ab->step();
    s.opt_g_ba->step();
  }

  route_push(s.pool_ab, s.pool_ba, GeneratorRole::ab(),
             ImageBatch{translated_b.data.detach().cpu(), translated_b.domain, translated_b.provenance}, s.stage);
  route_push(s.pool_ab, s.pool_ba, GeneratorRole::ba(),
             ImageBatch{translated_a.data.detach().cpu(), translated_a.domain, translated_a.provenance}, s.stage);

  ++s.step;
  sync_schedule();
  return out;
}

CheckpointFile Trainer::to_checkpoint() const {
  const auto& s = state_;
  CheckpointFile c;
  c.header["format"] = "transfig-train-state";
  c.header["arch"] = to_string(s.config.generator.arch);
  c.header["config"] = s.config.to_json();
  c.header["config_hash"] = std::to_string(s.config.hash());
  c.header["step"] = s.step;
  c.header["epoch"] = s.epoch;
  c.header["stage"] = to_string(s.stage);
  c.header["inputs_seen"] = s.inputs_seen;
  c.header["generated_inputs_seen"] = s.generated_inputs_seen;

  save_module(c, "g_ab", s.g_ab.net());
  save_module(c, "g_ba", s.g_ba.net());
  save_module(c, "d_shared", s.d_shared.net());
  save_rng(c, "g_ab", s.g_ab);
  save_rng(c, "g_ba", s.g_ba);
  save_optimizer(c, "optim/d_shared", *s.opt_d, s.config.optimizer);
  save_optimizer(c, "optim/g_ab", *s.opt_g_ab, s.config.optimizer);
  save_optimizer(c, "optim/g_ba", *s.opt_g_ba, s.config.optimizer);
  save_pool(c, c.header, "pool_ab", s.pool_ab);
  save_pool(c, c.header, "pool_ba", s.pool_ba);
  return c;
}

void Trainer::restore(const CheckpointFile& c) {
  auto& s = state_;
  const auto cfg = config_from_header(c);
  if (cfg.hash() != s.config.hash()) {
    throw IncompatibleCheckpointError("checkpoint was written for a different training configuration");
  }
  load_module(c, "g_ab", s.g_ab.net());
  load_module(c, "g_ba", s.g_ba.net());
  load_module(c, "d_shared", s.d_shared.net());
  load_rng(c, "g_ab", s.g_ab);
  load_rng(c, "g_ba", s.g_ba);
  load_optimizer(c, "optim/d_shared", *s.opt_d, s.config.optimizer);
  load_optimizer(c, "optim/g_ab", *s.opt_g_ab, s.config.optimizer);
  load_optimizer(c, "optim/g_ba", *s.opt_g_ba, s.config.optimizer);
  load_pool(c, "pool_ab", s.pool_ab);
  load_pool(c, "pool_ba", s.pool_ba);
  s.step = c.header.at("step").get<std::int64_t>();
  s.inputs_seen = c.header.value("inputs_seen", std::int64_t{0});
  s.generated_inputs_seen = c.header.value("generated_inputs_seen", std::int64_t{0});
  sync_schedule();
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  write_checkpoint_file(path, to_checkpoint());
}

Trainer load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const ImageSource> source_a,
                        std::shared_ptr<const ImageSource> source_b) {
  const auto ckpt = read_checkpoint_file(path);
  Trainer t(config_from_header(ckpt), std::move(source_a), std::move(source_b));
  t.restore(ckpt);
  return t;
}

LoadedGenerators load_generators(const std::filesystem::path& path) {
  const auto ckpt = read_checkpoint_file(path);
  auto cfg = config_from_header(ckpt);
  LoadedGenerators out{cfg, build_generator(cfg.generator, GeneratorRole::ab(), 0),
                       build_generator(cfg.generator, GeneratorRole::ba(), 0),
                       ckpt.header.value("step", std::int64_t{0})};
  load_module(ckpt, "g_ab", out.g_ab.net());
  load_module(ckpt, "g_ba", out.g_ba.net());
  out.g_ab.train(false);
  out.g_ba.train(false);
  return out;
}

std::vector<std::string> loss_log_columns() {
  std::vector<std::string> cols{"step"};
  for (const auto& t : kSharedDiscriminatorTerms) cols.emplace_back(t.name);
  for (const char* c : {"d_total", "g_ab_adv", "g_ab_rec", "g_ba_adv", "g_ba_rec"}) cols.emplace_back(c);
  return cols;
}

std::string loss_log_row(std::int64_t step, const LossBreakdown& l) {
  std::ostringstream row;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  row << step;
  for (const auto& t : kSharedDiscriminatorTerms) {
    row << ',';
    if (const double* v = l.d_term(t.name)) row << num(*v);
  }
  for (double v : {l.d_total, l.g_ab_adv, l.g_ab_rec, l.g_ba_adv, l.g_ba_rec}) row << ',' << num(v);
  return row.str();
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed to write " + path.string() + " (disk full?)");
  }
  std::filesystem::rename(tmp, path);
}

void write_samples(const Trainer& trainer, const ImageSource& a, const ImageSource& b,
                   const std::filesystem::path& dir, std::int64_t count) {
  const auto& s = trainer.state();
  torch::NoGradGuard no_grad;
  for (const auto* g : {&s.g_ab, &s.g_ba}) {
    const auto& src = g->role() == GeneratorRole::ab() ? a : b;
    const auto k = std::min<std::int64_t>(count, static_cast<std::int64_t>(src.size()));
    std::vector<torch::Tensor> inputs;
    for (std::int64_t i = 0; i < k; ++i) inputs.push_back(src.image(static_cast<std::size_t>(i), 0));
    auto x = torch::stack(inputs);
    const bool was_training = g->is_training();
    g->train(false);
    auto y = g->forward(x.to(s.g_ab.parameters().front().device())).cpu();
    g->train(was_training);
    // rows: input | translated
    auto grid = torch::cat({torch::cat(x.unbind(0), 1), torch::cat(y.unbind(0), 1)}, 2);
    write_rgb(dir / (std::string(g->role().name()) + ".png"), denormalize(grid).bytes);
  }
}

void prepare_loss_log(const std::filesystem::path& path, std::int64_t keep_through_step) {
  std::string header;
  for (const auto& c : loss_log_columns()) header += (header.empty() ? "" : ",") + c;
  std::string text = header + "\n";
  if (keep_through_step > 0 && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto step = std::stoll(line.substr(0, line.find(',')));
      if (step <= keep_through_step) text += line + "\n";
    }
  }
  write_text_atomic(path, text);
}

}  // namespace

FitResult fit(const TrainConfig& cfg, std::shared_ptr<const ImageSource> source_a,
              std::shared_ptr<const ImageSource> source_b, const FitOptions& options) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (options.run_dir.empty()) throw ConfigError("fit needs a run directory");
  fs::create_directories(options.run_dir / "checkpoints");

  std::optional<Trainer> trainer;
  if (options.resume_from) {
    trainer.emplace(load_checkpoint(*options.resume_from, source_a, source_b));
    if (trainer->config().hash() != cfg.hash()) {
      throw ConfigError("resume checkpoint was written with a different configuration");
    }
  } else {
    trainer.emplace(cfg, source_a, source_b);
  }
  write_text_atomic(options.run_dir / "config.json", trainer->config().to_json().dump(2) + "\n");

  const auto log_path = options.run_dir / "losses.csv";
  prepare_loss_log(log_path, options.resume_from ? trainer->state().step : 0);
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("cannot open " + log_path.string());

  FitResult result;
  result.run_dir = options.run_dir;
  result.d_term_count = discriminator_terms(cfg.discriminator_objective).size();
  auto checkpoint_path = [&](std::int64_t step) {
    return options.run_dir / "checkpoints" / ("step_" + std::to_string(step) + ".ckpt");
  };

  const auto spe = trainer->steps_per_epoch();
  const auto total = trainer->total_steps();
  std::int64_t last_saved = -1;
  while (trainer->state().step < total) {
    result.last = trainer->train_next();
    const auto step = trainer->state().step;
    log << loss_log_row(step, result.last) << '\n';
    if (!log) throw std::runtime_error("failed to append to " + log_path.string() + " (disk full?)");
    if (options.on_step) options.on_step(step, result.last);
    if (!options.quiet && (step % 100 == 0 || step == total)) {
      std::cerr << "step " << step << "/" << total << " d=" << result.last.d_total
                << " g_ab_adv=" << result.last.g_ab_adv << " g_ab_rec=" << result.last.g_ab_rec
                << " g_ba_adv=" << result.last.g_ba_adv << " g_ba_rec=" << result.last.g_ba_rec << '\n';
    }
    if (step % spe == 0) {
      const auto epoch = step / spe;
      if (epoch % cfg.checkpoint_every_epochs == 0) {
        log.flush();
        trainer->save_checkpoint(checkpoint_path(step));
        last_saved = step;
        if (cfg.sample_images > 0) {
          write_samples(*trainer, *source_a, *source_b, options.run_dir / "samples" / ("epoch_" + std::to_string(epoch)),
                        cfg.sample_images);
        }
      }
    }
  }
  log.flush();
  const auto final_step = trainer->state().step;
  if (last_saved != final_step) trainer->save_checkpoint(checkpoint_path(final_step));
  result.final_checkpoint = checkpoint_path(final_step);
  result.steps = final_step;
  result.inputs_seen = trainer->state().inputs_seen;
  result.generated_inputs_seen = trainer->state().generated_inputs_seen;
  return result;
}

FitResult fit(const TrainConfig& cfg, const UnpairedDataset& dataset_a, const UnpairedDataset& dataset_b,
              const FitOptions& options) {
  if (dataset_a.size() == 0 || dataset_b.size() == 0) throw ConfigError("fit needs two non-empty datasets");
  auto a = std::make_shared<DatasetImageSource>(dataset_a, cfg.augment());
  auto b = std::make_shared<DatasetImageSource>(dataset_b, cfg.augment());
  return fit(cfg, a, b, options);
}

}  // namespace transfig
