// aratts/wav.cc

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

#include "aratts/wav.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aratts/error.h"

namespace aratts {

namespace {

uint32_t ReadU32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void PutU32(std::string &s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}
void PutU16(std::string &s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioClip LoadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kMalformedWav, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    Throw(ErrorKind::kMalformedWav, path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t data_off = 0, data_len = 0;

  size_t off = 12;
  while (off + 8 <= n) {
    const char *id = bytes.data() + off;
    uint32_t len = ReadU32(p + off + 4);
    size_t body = off + 8;
    if (body + len > n)
      Throw(ErrorKind::kMalformedWav, path + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) Throw(ErrorKind::kMalformedWav, path + ": short fmt chunk");
      format = ReadU16(p + body);
      channels = ReadU16(p + body + 2);
      sample_rate = ReadU32(p + body + 4);
      bits = ReadU16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) Throw(ErrorKind::kMalformedWav, path + ": missing fmt chunk");
  if (data_off == 0 && data_len == 0)
    Throw(ErrorKind::kMalformedWav, path + ": missing data chunk");
  if (format != 1 || bits != 16)
    Throw(ErrorKind::kUnsupportedEncoding,
          path + ": only 16-bit integer PCM is supported (format=" +
              std::to_string(format) + ", bits=" + std::to_string(bits) + ")");
  if (channels == 0 || sample_rate == 0)
    Throw(ErrorKind::kMalformedWav, path + ": bad fmt fields");

  const size_t frame_bytes = 2u * channels;
  const size_t frames = data_len / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    const unsigned char *sp = p + data_off + i * frame_bytes;  // channel 0
    int16_t v = static_cast<int16_t>(sp[0] | (sp[1] << 8));
    clip.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return clip;
}

void WriteWav(const std::string &path, const AudioClip &clip) {
  std::string out;
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_len = n * 2;
  out.reserve(44 + data_len);

  out.append("RIFF");
  PutU32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  PutU16(out, 2);   // block align
  PutU16(out, 16);  // bits
  out.append("data");
  PutU32(out, data_len);
  for (uint32_t i = 0; i < n; ++i) {
    double q = std::nearbyint(clip.samples[i] * 32768.0);
    if (q > 32767.0) q = 32767.0;
    if (q < -32768.0) q = -32768.0;
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) Throw(ErrorKind::kIo, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) Throw(ErrorKind::kIo, "write failed for " + path);
}

}  // namespace aratts
