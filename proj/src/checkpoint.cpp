#include "transfig/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "transfig/errors.hpp"
#include "transfig/rng.hpp"

namespace transfig {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat: return 1;
    case torch::kDouble: return 2;
    case torch::kLong: return 3;
    case torch::kByte: return 4;
    case torch::kInt: return 5;
    case torch::kBool: return 6;
    default: throw CheckpointError(std::string("unsupported dtype in checkpoint: ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_code(std::uint8_t c) {
  switch (c) {
    case 1: return torch::kFloat;
    case 2: return torch::kDouble;
    case 3: return torch::kLong;
    case 4: return torch::kByte;
    case 5: return torch::kInt;
    case 6: return torch::kBool;
    default: throw CheckpointError("unknown dtype code " + std::to_string(c));
  }
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void CheckpointFile::add(std::string name, const torch::Tensor& t) {
  arrays.push_back(NamedArray{std::move(name), t.detach().to(torch::kCPU).contiguous().clone()});
}

bool CheckpointFile::has(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

const torch::Tensor& CheckpointFile::get(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a.tensor;
  }
  throw CheckpointError("checkpoint has no array named '" + std::string(name) + "'");
}

std::string serialize_checkpoint(const CheckpointFile& ckpt) {
  std::string out;
  out.append(kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto header = ckpt.header.dump();
  put<std::uint64_t>(out, header.size());
  out.append(header);
  put<std::uint64_t>(out, ckpt.arrays.size());
  for (const auto& a : ckpt.arrays) {
    auto t = a.tensor.detach().to(torch::kCPU).contiguous();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.append(a.name);
    put<std::uint8_t>(out, dtype_code(t.scalar_type()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) put<std::int64_t>(out, d);
    const auto nbytes = static_cast<std::uint64_t>(t.numel()) * t.element_size();
    put<std::uint64_t>(out, nbytes);
    out.append(static_cast<const char*>(t.data_ptr()), nbytes);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

CheckpointFile parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kCheckpointMagic.size()) != kCheckpointMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IncompatibleCheckpointError("checkpoint format version " + std::to_string(version) +
                                      " is not supported (this build reads version " +
                                      std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof(std::uint64_t)) throw CheckpointError("truncated checkpoint");
  const auto body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  if (stored != fnv1a64(body)) throw CheckpointError("checkpoint checksum mismatch (file corrupted or tampered)");

  CheckpointFile ckpt;
  const auto header_len = r.get<std::uint64_t>();
  try {
    ckpt.header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unreadable checkpoint header: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = std::string(r.take(r.get<std::uint32_t>()));
    const auto dtype = dtype_from_code(r.get<std::uint8_t>());
    const auto rank = r.get<std::uint32_t>();
    std::vector<std::int64_t> dims(rank);
    for (auto& d : dims) d = r.get<std::int64_t>();
    const auto nbytes = r.get<std::uint64_t>();
    const auto raw = r.take(nbytes);
    a.tensor = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    if (static_cast<std::uint64_t>(a.tensor.numel()) * a.tensor.element_size() != nbytes) {
      throw CheckpointError("array '" + a.name + "' byte length does not match its shape");
    }
    std::memcpy(a.tensor.data_ptr(), raw.data(), nbytes);
    ckpt.arrays.push_back(std::move(a));
  }
  if (r.pos() != body.size()) throw CheckpointError("trailing bytes in checkpoint");
  return ckpt;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw CheckpointError("failed to write checkpoint " + path.string() + " (disk full?)");
    }
  }
  std::filesystem::rename(tmp, path);
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace transfig
