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

#ifndef VQLAB_BINARY_IO_H_
#define VQLAB_BINARY_IO_H_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vqlab/autodiff.h"

namespace vqlab {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian helpers for checkpoint and codebook files.
void WriteMagic(std::ostream& out, std::string_view magic, uint32_t version);
// Returns the version; throws FormatError on a magic mismatch.
uint32_t ReadMagic(std::istream& in, std::string_view magic);

void WriteU64(std::ostream& out, uint64_t v);
uint64_t ReadU64(std::istream& in);
void WriteF64(std::ostream& out, double v);
double ReadF64(std::istream& in);
void WriteString(std::ostream& out, const std::string& s);
std::string ReadString(std::istream& in);
void WriteMatrix(std::ostream& out, const Matrix& m);
Matrix ReadMatrix(std::istream& in);

}  // namespace vqlab

#endif  // VQLAB_BINARY_IO_H_
