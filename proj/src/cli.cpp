#include "transfig/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "transfig/ablation.hpp"
#include "transfig/data.hpp"
#include "transfig/errors.hpp"
#include "transfig/metrics.hpp"
#include "transfig/rng.hpp"
#include "transfig/trainer.hpp"

#ifndef TRANSFIG_SOURCE_REVISION
#define TRANSFIG_SOURCE_REVISION "unknown"
#endif

namespace transfig {

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shared training-config flags: file first, then explicit flags on top.
struct ConfigFlags {
  std::string config_file;
  bool desk = false;
  std::vector<std::string> sets;
  std::optional<std::string> variant;
  std::optional<std::string> arch;
  std::optional<std::string> optimizer;
  std::optional<std::int64_t> epochs;
  std::optional<std::int64_t> max_steps;
  std::optional<std::int64_t> batch_size;
  std::optional<std::int64_t> image_size;
  std::optional<std::int64_t> stage_switch;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "JSON file with flat dotted keys");
    app.add_flag("--desk", desk, "start from the 32x32 miniature defaults");
    app.add_option("--set", sets, "override one key, e.g. --set pool.capacity=20")->take_all();
    app.add_option("--variant", variant, "baseline | d_shared1 | no_pool | no_stage1 | no_stage2");
    app.add_option("--arch", arch, "resnet | unet");
    app.add_option("--optimizer", optimizer, "adam | rmsprop");
    app.add_option("--epochs", epochs);
    app.add_option("--max-steps", max_steps);
    app.add_option("--batch-size", batch_size);
    app.add_option("--image-size", image_size);
    app.add_option("--stage-switch-epoch", stage_switch);
    app.add_option("--lr", lr);
    app.add_option("--seed", seed);
  }

  TrainConfig resolve() const {
    TrainConfig base = desk ? TrainConfig::desk_scale() : TrainConfig{};
    nlohmann::json overlay = nlohmann::json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read config file " + config_file);
      try {
        overlay = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + config_file + " is not valid JSON: " + e.what());
      }
      if (!overlay.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    if (arch) {
      // Switching architecture on the command line keeps the filter scale of the base.
      overlay["generator.arch"] = *arch;
    }
    auto put = [&](const char* key, const auto& v) {
      if (v) overlay[key] = *v;
    };
    put("variant", variant);
    put("optimizer", optimizer);
    put("total_epochs", epochs);
    put("max_steps", max_steps);
    put("batch_size", batch_size);
    put("image_size", image_size);
    put("stage_switch_epoch", stage_switch);
    put("lr", lr);
    put("seed", seed);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
      const auto key = kv.substr(0, eq);
      const auto value = kv.substr(eq + 1);
      try {
        overlay[key] = nlohmann::json::parse(value);
      } catch (const nlohmann::json::exception&) {
        overlay[key] = value;
      }
    }
    TrainConfig cfg = TrainConfig::from_json(overlay, base);
    if (const char* dev = std::getenv("TRANSFIG_DEVICE"); dev && *dev) cfg.device = dev;
    cfg.validate();
    return make_variant(cfg.variant, cfg);
  }
};

struct Invocation {
  std::string command;
  std::vector<std::string> argv;
  fs::path manifest_dir;
  nlohmann::json config;
};

EvalOptions eval_options(std::int64_t size, std::int64_t fid_iters, std::int64_t kid_iters, std::int64_t kid_subset,
                         std::uint64_t seed) {
  EvalOptions o;
  o.eval_size = size;
  o.fid_iterations = fid_iters;
  o.kid_iterations = kid_iters;
  o.kid_subset_size = kid_subset;
  o.seed = seed;
  return o;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw ConfigError(std::string(what) + " directory does not exist: " + p.string());
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},       {"argv", argv},
          {"config", config},         {"source_revision", source_revision},
          {"started_at", started_at}, {"finished_at", finished_at},
          {"outcome", outcome},       {"exit_code", exit_code}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.value("config", nlohmann::json());
  m.source_revision = j.value("source_revision", "");
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.outcome = j.value("outcome", "");
  m.exit_code = j.value("exit_code", 0);
  return m;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << manifest.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("failed to write manifest " + path.string());
  }
  fs::rename(tmp, path);
}

std::string source_revision() { return TRANSFIG_SOURCE_REVISION; }

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Unpaired image transfiguration with a shared conditional discriminator", "transfig"};
  app.require_subcommand(1);
  Invocation inv;
  std::function<void()> action;

  // train
  auto* train = app.add_subcommand("train", "train both generators and the shared discriminator");
  ConfigFlags train_flags;
  train_flags.attach(*train);
  std::string train_data;
  std::string train_out;
  std::string resume;
  bool verbose = false;
  train->add_option("--data", train_data, "dataset root with trainA/ and trainB/")->required();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_flag("--verbose", verbose, "print progress every 100 steps");
  train->callback([&] {
    inv.command = "train";
    inv.manifest_dir = train_out;
    action = [&] {
      const auto cfg = train_flags.resolve();
      inv.config = cfg.to_json();
      const DataLayout layout{train_data};
      require_dir(layout.root, "data");
      const auto [a, b] = load_unpaired(layout.train_a(), layout.train_b());
      FitOptions fo;
      fo.run_dir = train_out;
      fo.quiet = !verbose;
      if (!resume.empty()) fo.resume_from = fs::path(resume);
      const auto r = fit(cfg, a, b, fo);
      std::cout << "trained " << r.steps << " steps; final checkpoint " << r.final_checkpoint.string() << '\n';
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint with FID and KID on test images");
  std::string ckpt;
  std::string eval_data;
  std::string eval_out;
  std::string direction = "both";
  std::string embedder_spec = "hermetic";
  std::int64_t eval_size = 256;
  std::int64_t fid_iters = 10;
  std::int64_t kid_iters = 100;
  std::int64_t kid_subset = 0;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--data", eval_data, "dataset root with testA/ and testB/")->required();
  eval->add_option("--out", eval_out, "directory for metrics.csv, metrics.txt and the manifest")->required();
  eval->add_option("--direction", direction, "AB | BA | both");
  eval->add_option("--embedder", embedder_spec, "'hermetic' or a TorchScript feature extractor file");
  eval->add_option("--image-size", eval_size, "evaluation resolution");
  eval->add_option("--fid-iterations", fid_iters);
  eval->add_option("--kid-iterations", kid_iters);
  eval->add_option("--kid-subset", kid_subset, "0 selects min(n, 1000)");
  eval->add_option("--seed", eval_seed);
  eval->callback([&] {
    inv.command = "eval";
    inv.manifest_dir = eval_out;
    action = [&] {
      if (direction != "AB" && direction != "BA" && direction != "both") {
        throw ConfigError("--direction must be AB, BA or both");
      }
      const DataLayout layout{eval_data};
      require_dir(layout.root, "data");
      const auto embedder = make_embedder(embedder_spec);
      const auto opts = eval_options(eval_size, fid_iters, kid_iters, kid_subset, eval_seed);
      MetricReport report;
      if (direction == "both") {
        report = evaluate_checkpoint(ckpt, layout.root, *embedder, opts);
      } else {
        const auto role = parse_generator_role(direction);
        report.embedder_id = embedder->id();
        report.checkpoint_id = ckpt;
        report.entries.push_back(evaluate(ckpt, layout.test_dir(role.source()), layout.test_dir(role.target()), role,
                                          *embedder, opts));
      }
      fs::create_directories(eval_out);
      std::ofstream(fs::path(eval_out) / "metrics.csv") << report.to_csv();
      std::ofstream(fs::path(eval_out) / "metrics.txt") << report.to_table();
      std::cout << report.to_table();
    };
  });

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and score every ablation variant (or both architectures)");
  ConfigFlags ablate_flags;
  ablate_flags.attach(*ablate);
  std::string ablate_data;
  std::string ablate_out;
  std::string seeds_text = "0,1,2";
  int jobs = 1;
  bool arch_comparison = false;
  std::string ablate_embedder = "hermetic";
  std::int64_t ablate_eval_size = 256;
  ablate->add_option("--data", ablate_data, "dataset root with trainA/, trainB/, testA/, testB/")->required();
  ablate->add_option("--out", ablate_out)->required();
  ablate->add_option("--seeds", seeds_text, "comma separated");
  ablate->add_option("--jobs", jobs, "runs trained concurrently");
  ablate->add_flag("--arch-comparison", arch_comparison, "compare unet and resnet instead of the variants");
  ablate->add_option("--embedder", ablate_embedder);
  ablate->add_option("--eval-size", ablate_eval_size);
  ablate->callback([&] {
    inv.command = "ablate";
    inv.manifest_dir = ablate_out;
    action = [&] {
      const auto cfg = ablate_flags.resolve();
      inv.config = cfg.to_json();
      require_dir(ablate_data, "data");
      SuiteOptions so;
      so.out_dir = ablate_out;
      so.jobs = jobs;
      so.embedder = ablate_embedder;
      so.eval.eval_size = ablate_eval_size;
      so.seeds.clear();
      std::stringstream ss(seeds_text);
      for (std::string tok; std::getline(ss, tok, ',');) {
        try {
          so.seeds.push_back(std::stoull(tok));
        } catch (const std::exception&) {
          throw ConfigError("--seeds expects comma separated integers, got '" + tok + "'");
        }
      }
      const auto r = arch_comparison ? run_arch_comparison(cfg, ablate_data, so) : run_ablation_suite(cfg, ablate_data, so);
      std::cout << r.report.to_table();
      std::size_t failed = 0;
      for (const auto& run : r.runs) failed += run.ok ? 0 : 1;
      if (failed > 0) throw std::runtime_error(std::to_string(failed) + " run(s) failed; see runs.csv");
    };
  });

  // gen-synth
  auto* synth = app.add_subcommand("gen-synth", "write the synthetic color-swap dataset");
  SyntheticSpec spec;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--n", spec.n_per_domain, "training images per domain");
  synth->add_option("--n-test", spec.n_test_per_domain, "test images per domain");
  synth->add_option("--size", spec.image_size);
  synth->add_option("--seed", synth_seed);
  synth->callback([&] {
    inv.command = "gen-synth";
    inv.manifest_dir = synth_out;
    action = [&] {
      spec.bg_texture_seed = derive_seed(synth_seed, "synthetic-background-seed");
      spec.shape_seed = derive_seed(synth_seed, "synthetic-shape-seed");
      make_synthetic(spec, synth_out);
      inv.config = {{"n_per_domain", spec.n_per_domain},
                    {"n_test_per_domain", spec.n_test_per_domain},
                    {"image_size", spec.image_size},
                    {"seed", synth_seed}};
      std::cout << "wrote " << 2 * (spec.n_per_domain + spec.n_test_per_domain) << " images to " << synth_out << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  RunManifest manifest;
  manifest.command = inv.command;
  manifest.argv = args;
  manifest.source_revision = source_revision();
  manifest.started_at = utc_now();
  int code = kExitOk;
  try {
    action();
    manifest.outcome = "success";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    manifest.outcome = std::string("failure: ") + e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    manifest.outcome = std::string("failure: ") + e.what();
    code = kExitRuntime;
  }
  manifest.finished_at = utc_now();
  manifest.config = inv.config;
  manifest.exit_code = code;
  if (!inv.manifest_dir.empty() && (code != kExitUsage || fs::is_directory(inv.manifest_dir))) {
    try {
      write_manifest(inv.manifest_dir / "manifest.json", manifest);
    } catch (const std::exception& e) {
      std::cerr << "warning: " << e.what() << '\n';
    }
  }
  return code;
}

}  // namespace transfig
