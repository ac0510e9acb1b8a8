#pragma once

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace transfig {

// On-disk layout (little endian):
//   8 bytes  magic "TFGCKPT\0"
//   u32      format version
//   u64      header length, then UTF-8 JSON header
//   u64      array count, then per array:
//              u32 name length, name bytes, u8 dtype code, u32 rank,
//              i64 dims[rank], u64 byte length, raw contiguous bytes
//   u64      FNV-1a of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic{"TFGCKPT\0", 8};

struct NamedArray {
  std::string name;
  torch::Tensor tensor;
};

struct CheckpointFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  void add(std::string name, const torch::Tensor& t);
  bool has(std::string_view name) const;
  // CheckpointError when absent.
  const torch::Tensor& get(std::string_view name) const;
};

std::string serialize_checkpoint(const CheckpointFile& ckpt);
// CheckpointError on corruption; IncompatibleCheckpointError on a version
// this build cannot read.
CheckpointFile parse_checkpoint(std::string_view bytes);

// Writes to a sibling temporary file and renames it into place, so a failed
// write never clobbers an existing checkpoint.
void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

}  // namespace transfig
