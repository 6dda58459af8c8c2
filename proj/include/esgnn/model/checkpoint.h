// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "esgnn/core/error.h"
#include "esgnn/model/params.h"

namespace esgnn::model {

// Binary parameter container: magic, version, a config description string,
// scalar width, then named arrays with shapes. Little-endian throughout.
inline constexpr char kCheckpointMagic[8] = {'E', 'S', 'G', 'N', 'N', 'C', 'K', '1'};

namespace detail {

inline void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("truncated checkpoint");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const ParamStore<T>& store,
                     const std::string& config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.write(kCheckpointMagic, 8);
  detail::write_u64(out, 1);  // version
  detail::write_u64(out, config_text.size());
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  detail::write_u64(out, sizeof(T));
  detail::write_u64(out, store.n_entries());
  for (int i = 0; i < store.n_entries(); ++i) {
    const auto& e = store.entry(i);
    detail::write_u64(out, e.name.size());
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::write_u64(out, e.rows);
    detail::write_u64(out, e.cols);
    out.write(reinterpret_cast<const char*>(e.data.data()),
              static_cast<std::streamsize>(e.data.size() * sizeof(T)));
  }
  if (!out) throw DataError("write failed: " + path);
}

// Loads values into an already-registered store; names, order, and shapes
// must match exactly. Returns the stored config text.
template <typename T>
std::string load_checkpoint(const std::string& path, ParamStore<T>& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  if (detail::read_u64(in) != 1) throw DataError("unsupported checkpoint version");
  std::string config_text(detail::read_u64(in), '\0');
  in.read(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  if (detail::read_u64(in) != sizeof(T))
    throw DataError("checkpoint precision does not match the run precision");
  const uint64_t n = detail::read_u64(in);
  if (n != static_cast<uint64_t>(store.n_entries()))
    throw DataError("checkpoint entry count mismatch");
  for (int i = 0; i < store.n_entries(); ++i) {
    auto& e = store.entry(i);
    std::string name(detail::read_u64(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (name != e.name) throw DataError("checkpoint entry order mismatch at " + name);
    const uint64_t rows = detail::read_u64(in), cols = detail::read_u64(in);
    if (rows != static_cast<uint64_t>(e.rows) || cols != static_cast<uint64_t>(e.cols))
      throw DataError("checkpoint shape mismatch at " + name);
    in.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(T)));
    if (!in) throw DataError("truncated checkpoint");
  }
  return config_text;
}

}  // namespace esgnn::model
