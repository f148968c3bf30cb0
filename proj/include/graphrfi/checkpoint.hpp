#pragma once

// Versioned binary checkpoint holding every trainable tensor plus the feature
// standardizer, with a JSON meta block. Exact layout (documented in
// docs/checkpoint.md, all integers little-endian):
//   bytes 0..3   magic "GRFI"
//   u32          format version (1)
//   u32          endianness tag 0x01020304
//   u64          meta length, then that many bytes of UTF-8 JSON
//   u32          tensor count
//   per tensor:  u32 name length, name bytes, u32 rows, u32 cols,
//                rows*cols IEEE-754 binary64 values, row-major

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphrfi/errors.hpp"
#include "graphrfi/features.hpp"
#include "graphrfi/tensor.hpp"

namespace graphrfi {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kEndianTag = 0x01020304;

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError("checkpoint: truncated file");
  return v;
}

}  // namespace detail

struct Checkpoint {
  nlohmann::json meta;
  ParamStore params;
  StandardizerStats stats;
};

inline void save_checkpoint(const std::string& path, const ParamStore& params,
                            const StandardizerStats& stats, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint: " + path);
  out.write("GRFI", 4);
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint32_t>(out, kEndianTag);
  const std::string meta_str = meta.dump();
  detail::put<std::uint64_t>(out, meta_str.size());
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  auto write_tensor = [&](const std::string& name, const double* data, int rows, int cols) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(rows));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows) *
                                           static_cast<std::size_t>(cols)));
  };

  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size() + 2));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const Tensor& t = params.tensors[i];
    write_tensor(params.names[i], t.v.data(), t.rows, t.cols);
  }
  write_tensor("std.mean", stats.mean.data(), kFeatureDim, 1);
  write_tensor("std.stddev", stats.stddev.data(), kFeatureDim, 1);
  if (!out) throw RuntimeFailure("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GRFI", 4) != 0)
    throw ValidationError("checkpoint: bad magic in " + path);
  const auto version = detail::get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  if (detail::get<std::uint32_t>(in) != kEndianTag)
    throw ValidationError("checkpoint: endianness mismatch");
  const auto meta_len = detail::get<std::uint64_t>(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw ValidationError("checkpoint: truncated meta block");

  Checkpoint ck;
  ck.meta = nlohmann::json::parse(meta_str);
  const auto count = detail::get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rows = detail::get<std::uint32_t>(in);
    const auto cols = detail::get<std::uint32_t>(in);
    Tensor t(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char*>(t.v.data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
    if (!in) throw ValidationError("checkpoint: truncated tensor " + name);
    if (name == "std.mean") {
      std::copy(t.v.begin(), t.v.end(), ck.stats.mean.begin());
    } else if (name == "std.stddev") {
      std::copy(t.v.begin(), t.v.end(), ck.stats.stddev.begin());
    } else {
      ck.params.names.push_back(name);
      ck.params.tensors.push_back(std::move(t));
    }
  }
  return ck;
}

}  // namespace graphrfi
