// checkpoint.cc

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aratts/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aratts/error.h"

namespace aratts {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'T', 'S'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeF64 = 1;

void PutU16(std::ostream &os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char *>(b), 2);
}

void PutU32(std::ostream &os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 4);
}

void PutF64(std::ostream &os, double v) {
  uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 8);
}

void Need(std::istream &is, char *buf, std::size_t n, const char *what) {
  is.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    Throw(ErrorKind::kIo, std::string("checkpoint truncated reading ") + what);
}

uint16_t GetU16(std::istream &is, const char *what) {
  unsigned char b[2];
  Need(is, reinterpret_cast<char *>(b), 2, what);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t GetU32(std::istream &is, const char *what) {
  unsigned char b[4];
  Need(is, reinterpret_cast<char *>(b), 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

double GetF64(std::istream &is, const char *what) {
  unsigned char b[8];
  Need(is, reinterpret_cast<char *>(b), 8, what);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v = 0;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

float GetF32(std::istream &is, const char *what) {
  unsigned char b[4];
  Need(is, reinterpret_cast<char *>(b), 4, what);
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(b[i]) << (8 * i);
  float v = 0;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string &path, const ParamStore &params,
                    const std::string &metadata_json) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 4);
  PutU32(os, kVersion);
  const std::vector<std::string> names = params.Names();
  if (names.size() > 0xffffffffu)
    Throw(ErrorKind::kBadConfig, "checkpoint: too many tensors");
  PutU32(os, static_cast<uint32_t>(names.size()));
  for (const std::string &name : names) {
    if (name.size() > 0xffffu)
      Throw(ErrorKind::kBadConfig, "checkpoint: tensor name too long: " + name);
    const Tensor &t = params.Get(name);
    PutU16(os, static_cast<uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(kDtypeF64));
    os.put(static_cast<char>(t.rank()));
    for (int r = 0; r < t.rank(); ++r)
      PutU32(os, static_cast<uint32_t>(t.dim(r)));
    for (int64_t i = 0; i < t.numel(); ++i) PutF64(os, t[i]);
  }
  if (metadata_json.size() > 0xffffffffu)
    Throw(ErrorKind::kBadConfig, "checkpoint: metadata too large");
  PutU32(os, static_cast<uint32_t>(metadata_json.size()));
  os.write(metadata_json.data(),
           static_cast<std::streamsize>(metadata_json.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot open for write: " + path);
  const std::string blob = os.str();
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  f.flush();
  if (!f) Throw(ErrorKind::kIo, "write failed: " + path);
}

const Tensor &LoadedCheckpoint::at(const std::string &name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    Throw(ErrorKind::kShapeConflict, "checkpoint has no tensor " + name);
  return it->second;
}

LoadedCheckpoint LoadCheckpoint(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Throw(ErrorKind::kIo, "cannot open checkpoint: " + path);
  char magic[4];
  Need(f, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    Throw(ErrorKind::kBadConfig, "not a checkpoint file: " + path);
  const uint32_t version = GetU32(f, "version");
  if (version != kVersion)
    Throw(ErrorKind::kBadConfig,
          "unsupported checkpoint version " + std::to_string(version));
  const uint32_t count = GetU32(f, "tensor count");
  LoadedCheckpoint out;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = GetU16(f, "name length");
    std::string name(name_len, '\0');
    if (name_len > 0) Need(f, name.data(), name_len, "name");
    char dtype_c = 0, rank_c = 0;
    Need(f, &dtype_c, 1, "dtype");
    Need(f, &rank_c, 1, "rank");
    const uint8_t dtype = static_cast<uint8_t>(dtype_c);
    const int rank = static_cast<uint8_t>(rank_c);
    if (dtype != kDtypeF32 && dtype != kDtypeF64)
      Throw(ErrorKind::kBadConfig,
            "checkpoint tensor " + name + " has unknown dtype");
    if (rank > 4)
      Throw(ErrorKind::kBadConfig,
            "checkpoint tensor " + name + " has rank " + std::to_string(rank));
    std::vector<int64_t> dims(rank);
    int64_t numel = 1;
    for (int r = 0; r < rank; ++r) {
      dims[r] = static_cast<int64_t>(GetU32(f, "dim"));
      numel *= dims[r];
    }
    Tensor t(dims);
    for (int64_t k = 0; k < numel; ++k)
      t[k] = (dtype == kDtypeF64) ? GetF64(f, "data")
                                  : static_cast<double>(GetF32(f, "data"));
    if (out.tensors.count(name) != 0)
      Throw(ErrorKind::kBadConfig, "checkpoint repeats tensor " + name);
    out.names.push_back(name);
    out.tensors.emplace(name, std::move(t));
  }
  const uint32_t meta_len = GetU32(f, "metadata length");
  out.metadata_json.resize(meta_len);
  if (meta_len > 0) Need(f, out.metadata_json.data(), meta_len, "metadata");
  return out;
}

void RestoreParams(ParamStore &dst, const LoadedCheckpoint &src) {
  const std::vector<std::string> names = dst.Names();
  for (const std::string &name : names) {
    auto it = src.tensors.find(name);
    if (it == src.tensors.end())
      Throw(ErrorKind::kShapeConflict, "checkpoint is missing tensor " + name);
    Tensor &d = dst.Get(name);
    if (!(it->second.shape() == d.shape()))
      Throw(ErrorKind::kShapeConflict,
            "checkpoint tensor " + name + " has a different shape");
    d = it->second;
  }
  if (src.names.size() != names.size()) {
    for (const std::string &name : src.names)
      if (!dst.Has(name))
        Throw(ErrorKind::kShapeConflict,
              "checkpoint has unexpected tensor " + name);
  }
}

}  // namespace aratts
