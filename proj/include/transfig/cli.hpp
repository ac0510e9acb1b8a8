#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace transfig {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: train, eval, ablate, gen-synth. TRANSFIG_DEVICE selects the
// torch device for training and evaluation.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;  // resolved, may be null
  std::string source_revision;
  std::string started_at;
  std::string finished_at;
  std::string outcome;  // "success" or "failure: <message>"
  int exit_code = 0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Write-then-rename so a manifest is either absent or complete.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

std::string source_revision();

}  // namespace transfig
