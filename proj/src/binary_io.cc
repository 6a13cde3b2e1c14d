// Copyright 2026 The vqlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqlab/binary_io.h"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace vqlab {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr uint64_t kMaxElements = uint64_t{1} << 34;

void ReadExact(std::istream& in, char* data, size_t n) {
  in.read(data, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw FormatError("unexpected end of binary stream");
  }
}

}  // namespace

void WriteMagic(std::ostream& out, std::string_view magic, uint32_t version) {
  if (magic.size() != 4) throw std::invalid_argument("magic must be 4 bytes");
  out.write(magic.data(), 4);
  char buf[4];
  std::memcpy(buf, &version, 4);
  out.write(buf, 4);
}

uint32_t ReadMagic(std::istream& in, std::string_view magic) {
  char buf[4];
  ReadExact(in, buf, 4);
  if (std::string_view(buf, 4) != magic) {
    throw FormatError("bad magic: expected '" + std::string(magic) + "'");
  }
  uint32_t version;
  ReadExact(in, buf, 4);
  std::memcpy(&version, buf, 4);
  return version;
}

void WriteU64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint64_t ReadU64(std::istream& in) {
  uint64_t v;
  ReadExact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void WriteF64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

double ReadF64(std::istream& in) {
  double v;
  ReadExact(in, reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void WriteString(std::ostream& out, const std::string& s) {
  WriteU64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream& in) {
  const uint64_t n = ReadU64(in);
  if (n > (uint64_t{1} << 24)) throw FormatError("string length too large");
  std::string s(n, '\0');
  ReadExact(in, s.data(), n);
  return s;
}

void WriteMatrix(std::ostream& out, const Matrix& m) {
  WriteU64(out, static_cast<uint64_t>(m.rows()));
  WriteU64(out, static_cast<uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix ReadMatrix(std::istream& in) {
  const uint64_t rows = ReadU64(in);
  const uint64_t cols = ReadU64(in);
  if (rows > kMaxElements || cols > kMaxElements ||
      (cols != 0 && rows > kMaxElements / cols)) {
    throw FormatError("matrix dimensions too large");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  ReadExact(in, reinterpret_cast<char*>(m.data()),
            static_cast<size_t>(m.size()) * sizeof(double));
  return m;
}

}  // namespace vqlab
