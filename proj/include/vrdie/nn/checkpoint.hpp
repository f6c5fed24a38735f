#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "vrdie/io.hpp"
#include "vrdie/nn/tape.hpp"

// Checkpoint container, little-endian throughout:
//   "VRDIECKP" | u32 version | u64 config_len | config (UTF-8 JSON)
//   | u32 param_count | { u32 name_len | name | u64 rows | u64 cols | rows*cols f64 }*
namespace vrdie::nn {

inline constexpr char kCheckpointMagic[8] = {'V', 'R', 'D', 'I', 'E', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string config;  // opaque JSON block
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  }
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, ck.config.size());
  out += ck.config;
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    detail::put_le<std::uint64_t>(out, t.value.rows());
    detail::put_le<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.values()) detail::put_le<double>(out, v);
  }
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& in) {
  if (in.size() < sizeof(kCheckpointMagic) || std::memcmp(in.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CheckpointError("not a checkpoint (bad magic)");
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = detail::get_le<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  const auto clen = detail::get_le<std::uint64_t>(in, pos);
  if (pos + clen > in.size()) throw CheckpointError("checkpoint truncated in config block");
  ck.config = in.substr(pos, clen);
  pos += clen;
  const auto count = detail::get_le<std::uint32_t>(in, pos);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = detail::get_le<std::uint32_t>(in, pos);
    if (pos + nlen > in.size()) throw CheckpointError("checkpoint truncated in tensor name");
    NamedTensor t;
    t.name = in.substr(pos, nlen);
    pos += nlen;
    const auto rows = detail::get_le<std::uint64_t>(in, pos);
    const auto cols = detail::get_le<std::uint64_t>(in, pos);
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = detail::get_le<double>(in, pos);
    t.value = Tensor(rows, cols, std::move(data));
    ck.tensors.push_back(std::move(t));
  }
  if (pos != in.size()) throw CheckpointError("trailing bytes after checkpoint");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

// Copies matching tensors into `params`; every parameter must be present with
// the same shape.
inline void restore_parameters(const Checkpoint& ck, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const Tensor* t = ck.find(p->name);
    if (!t) throw CheckpointError("checkpoint is missing parameter " + p->name);
    if (!t->same_shape(p->value))
      throw CheckpointError("shape mismatch for " + p->name + ": checkpoint " + t->shape_str() + " vs model " +
                            p->value.shape_str());
    p->value = *t;
    p->zero_grad();
  }
}

}  // namespace vrdie::nn
