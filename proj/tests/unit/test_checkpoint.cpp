#include <gtest/gtest.h>

#include <cstring>

#include "common.hpp"
#include "transfig/checkpoint.hpp"
#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

using namespace transfig;

namespace {

CheckpointFile sample() {
  CheckpointFile c;
  c.header["format"] = "test";
  c.header["step"] = 12;
  c.add("w", test::rand_images(2, 3, 1));
  c.add("ids", torch::arange(5, torch::kLong));
  c.add("d", torch::tensor({1.5, -2.0}, torch::kDouble));
  c.add("empty", torch::zeros({0, 4}));
  return c;
}

}  // namespace

TEST(Checkpoint, SerializeParseRoundTrip) {
  const auto c = sample();
  const auto bytes = serialize_checkpoint(c);
  const auto back = parse_checkpoint(bytes);
  EXPECT_EQ(back.header, c.header);
  ASSERT_EQ(back.arrays.size(), c.arrays.size());
  for (const auto& a : c.arrays) {
    EXPECT_EQ(back.get(a.name).dtype(), a.tensor.dtype());
    EXPECT_TRUE(torch::equal(back.get(a.name), a.tensor)) << a.name;
  }
  EXPECT_EQ(serialize_checkpoint(back), bytes);
}

TEST(Checkpoint, MissingArray) {
  const auto c = sample();
  EXPECT_TRUE(c.has("w"));
  EXPECT_FALSE(c.has("nope"));
  EXPECT_THROW(c.get("nope"), CheckpointError);
}

TEST(Checkpoint, TamperingDetected) {
  auto bytes = serialize_checkpoint(sample());
  auto flipped = bytes;
  flipped[20] ^= 0x01;
  EXPECT_THROW(parse_checkpoint(flipped), CheckpointError);
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(parse_checkpoint(magic), CheckpointError);
}

TEST(Checkpoint, VersionMismatchIsIncompatible) {
  auto bytes = serialize_checkpoint(sample());
  bytes[8] = static_cast<char>(kCheckpointVersion + 1);
  // Re-seal the trailing hash so only the version differs.
  const auto body = bytes.substr(0, bytes.size() - 8);
  const std::uint64_t h = fnv1a64(body);
  std::memcpy(bytes.data() + bytes.size() - 8, &h, 8);
  EXPECT_THROW(parse_checkpoint(bytes), IncompatibleCheckpointError);
}

TEST(Checkpoint, FileWriteIsAtomic) {
  test::TempDir dir;
  const auto path = dir / "x.ckpt";
  write_checkpoint_file(path, sample());
  const auto back = read_checkpoint_file(path);
  EXPECT_EQ(back.header["step"], 12);
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    EXPECT_EQ(e.path().filename(), "x.ckpt");
  }
  EXPECT_THROW(read_checkpoint_file(dir / "absent.ckpt"), CheckpointError);
}
