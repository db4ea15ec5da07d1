// Copyright 2026 The strided-tenet Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace stenet {

// Coarse error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kUsage,
  kData,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define STENET_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

// Tensor shapes or extents disagree.
STENET_DEFINE_ERROR(DimensionError, kData);
// Axis or element index out of range.
STENET_DEFINE_ERROR(IndexError, kData);
// Input value outside the domain of a function (e.g. intensity not in [0,1]).
STENET_DEFINE_ERROR(DomainError, kData);
// A dense oracle would exceed its size guard.
STENET_DEFINE_ERROR(CapacityError, kData);
// Image, patch grid or mask geometry is inconsistent.
STENET_DEFINE_ERROR(ShapeError, kData);
// A cache or state object does not belong to the model it is used with.
STENET_DEFINE_ERROR(StateError, kData);
STENET_DEFINE_ERROR(IoError, kData);
STENET_DEFINE_ERROR(FormatError, kData);
STENET_DEFINE_ERROR(VersionError, kData);
// A metric is mathematically undefined for the given input.
STENET_DEFINE_ERROR(UndefinedMetricError, kData);
// Non-finite values, overflow or divergence.
STENET_DEFINE_ERROR(NumericError, kNumeric);
STENET_DEFINE_ERROR(UsageError, kUsage);

#undef STENET_DEFINE_ERROR

// Raised when an intermediate chain product leaves the representable range.
class OverflowError : public NumericError {
 public:
  OverflowError(const std::string& what, int site)
      : NumericError(what), site_(site) {}

  int site() const noexcept { return site_; }

 private:
  int site_;
};

}  // namespace stenet
