/* Copyright 2026 The bialign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "bialign/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "bialign/rng.hpp"

namespace bialign {

namespace {

constexpr char kMagic[4] = {'B', 'A', 'L', 'N'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }
  void section(const ParameterSet& tensors) {
    u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      u32(static_cast<std::uint32_t>(name.size()));
      bytes(name);
      const Shape s = t.shape();
      for (std::int64_t d : {s.n, s.c, s.h, s.w}) u32(static_cast<std::uint32_t>(d));
      for (float v : t.data()) u32(std::bit_cast<std::uint32_t>(v));
    }
  }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  ParameterSet section(bool requires_grad) {
    ParameterSet out;
    const std::uint32_t count = u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name = bytes(u32());
      Shape s;
      s.n = u32();
      s.c = u32();
      s.h = u32();
      s.w = u32();
      std::int64_t numel;
      try {
        numel = s.numel();
      } catch (const std::length_error&) {
        throw CheckpointError("tensor " + name + " has an implausible shape");
      }
      need(static_cast<std::size_t>(numel) * 4);
      std::vector<float> v(static_cast<std::size_t>(numel));
      for (auto& x : v) x = std::bit_cast<float>(u32());
      auto t = Tensor::from_data(s, std::move(v));
      t.set_requires_grad(requires_grad);
      if (!out.emplace(std::move(name), std::move(t)).second) {
        throw CheckpointError("duplicate tensor name in checkpoint");
      }
    }
    return out;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Checkpoint::config_digest() const { return fnv1a64(config_text); }

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.u32(ckpt.iteration);
  w.u64(ckpt.config_digest());
  w.u32(static_cast<std::uint32_t>(ckpt.config_text.size()));
  w.bytes(ckpt.config_text);
  w.section(ckpt.state.params);
  w.section(ckpt.velocity);
  w.section(ckpt.state.buffers);
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw CheckpointError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.iteration = r.u32();
  const std::uint64_t digest = r.u64();
  c.config_text = r.bytes(r.u32());
  if (c.config_digest() != digest) throw CheckpointError("config digest mismatch");
  c.state.params = r.section(true);
  c.velocity = r.section(false);
  c.state.buffers = r.section(false);
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace bialign
