// Copyright 2026 The LHPO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lhpo/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "lhpo/errors.h"

namespace lhpo {
namespace {

constexpr std::uint32_t kMaxWidth = 1u << 20;
constexpr std::uint32_t kMaxLayers = 64;

class Writer {
 public:
  void Bytes(std::string_view s) { out_.append(s); }
  void U32(std::uint32_t v) { Little(v, 4); }
  void U64(std::uint64_t v) { Little(v, 8); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  std::string Take() { return std::move(out_); }

 private:
  void Little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void Magic() {
    if (in_.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
      throw ParseError("not an LHPO1 checkpoint (bad magic bytes)");
    }
    pos_ = kCheckpointMagic.size();
  }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Little(4)); }
  std::uint64_t U64() { return Little(8); }
  double F64() { return std::bit_cast<double>(U64()); }
  bool AtEnd() const { return pos_ == in_.size(); }

 private:
  std::uint64_t Little(int n) {
    if (pos_ + n > in_.size()) throw ParseError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void WriteParams(Writer& w, const SurrogateParams& params) {
  const Architecture& arch = params.arch();
  w.U32(static_cast<std::uint32_t>(arch.config_dim));
  w.U32(static_cast<std::uint32_t>(arch.set_dim));
  w.U32(static_cast<std::uint32_t>(arch.encoder_hidden.size()));
  for (int width : arch.encoder_hidden) w.U32(static_cast<std::uint32_t>(width));
  w.U32(static_cast<std::uint32_t>(arch.head_hidden.size()));
  for (int width : arch.head_hidden) w.U32(static_cast<std::uint32_t>(width));
  w.U64(params.size());
  for (double x : params.weights()) w.F64(x);
}

int Width(Reader& r) {
  const std::uint32_t v = r.U32();
  if (v == 0 || v > kMaxWidth) throw ParseError("checkpoint has an invalid layer width");
  return static_cast<int>(v);
}

std::vector<int> Widths(Reader& r) {
  const std::uint32_t n = r.U32();
  if (n > kMaxLayers) throw ParseError("checkpoint has too many layers");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n; ++i) widths.push_back(Width(r));
  return widths;
}

SurrogateParams ReadParams(Reader& r) {
  Architecture arch;
  arch.config_dim = Width(r);
  arch.set_dim = Width(r);
  arch.encoder_hidden = Widths(r);
  arch.head_hidden = Widths(r);
  SurrogateParams params(arch);
  const std::uint64_t count = r.U64();
  if (count != params.size()) {
    throw ParseError("checkpoint weight count " + std::to_string(count) +
                     " does not match its shape header (" + std::to_string(params.size()) + ")");
  }
  for (double& x : params.weights()) {
    x = r.F64();
    if (!std::isfinite(x)) throw InvariantError("checkpoint contains a non-finite weight");
  }
  return params;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

}  // namespace

std::string SerializeSurrogate(const SurrogateParams& params) {
  Writer w;
  w.Bytes(kCheckpointMagic);
  WriteParams(w, params);
  return w.Take();
}

SurrogateParams DeserializeSurrogate(std::string_view bytes) {
  Reader r(bytes);
  r.Magic();
  SurrogateParams params = ReadParams(r);
  if (!r.AtEnd()) throw ParseError("trailing bytes after surrogate checkpoint");
  return params;
}

std::string SerializeEnsemble(const Ensemble& ensemble) {
  ensemble.Validate();
  Writer w;
  w.Bytes(kCheckpointMagic);
  w.U32(static_cast<std::uint32_t>(ensemble.size()));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    w.U64(ensemble.member_seeds[i]);
    WriteParams(w, ensemble.members[i]);
  }
  return w.Take();
}

Ensemble DeserializeEnsemble(std::string_view bytes) {
  Reader r(bytes);
  r.Magic();
  const std::uint32_t n = r.U32();
  if (n == 0 || n > 4096) throw ParseError("checkpoint has an invalid member count");
  Ensemble ensemble;
  for (std::uint32_t i = 0; i < n; ++i) {
    ensemble.member_seeds.push_back(r.U64());
    ensemble.members.push_back(ReadParams(r));
  }
  if (!r.AtEnd()) throw ParseError("trailing bytes after ensemble checkpoint");
  ensemble.Validate();
  return ensemble;
}

void WriteSurrogateCheckpoint(const SurrogateParams& params, const std::filesystem::path& path) {
  WriteFile(path, SerializeSurrogate(params));
}

SurrogateParams ReadSurrogateCheckpoint(const std::filesystem::path& path) {
  return DeserializeSurrogate(ReadFile(path));
}

void WriteEnsembleCheckpoint(const Ensemble& ensemble, const std::filesystem::path& path) {
  WriteFile(path, SerializeEnsemble(ensemble));
}

Ensemble ReadEnsembleCheckpoint(const std::filesystem::path& path) {
  return DeserializeEnsemble(ReadFile(path));
}

}  // namespace lhpo
