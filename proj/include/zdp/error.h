// Copyright 2026 The zdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZDP_ERROR_H_
#define ZDP_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zdp {

// Precondition or shape violation in a numeric routine.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A computation whose contract cannot be honoured (non-real loss, unknown
// primitive on a tape, NaN during training).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or truncated serialized data. Carries the byte offset at which
// the problem was detected.
class FormatError : public std::runtime_error {
 public:
  enum class Category {
    kIo,
    kBadMagic,
    kBadVersion,
    kTruncated,
    kSizeOverflow,
    kBadRank,
    kBadDimension,
    kBadClassCount,
    kLabelOutOfRange,
    kTrailingData,
  };

  FormatError(Category category, std::uint64_t offset, const std::string& what)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        category_(category),
        offset_(offset) {}

  Category category() const { return category_; }
  std::uint64_t offset() const { return offset_; }

 private:
  Category category_;
  std::uint64_t offset_;
};

inline const char* CategoryName(FormatError::Category c) {
  switch (c) {
    case FormatError::Category::kIo: return "io";
    case FormatError::Category::kBadMagic: return "bad magic";
    case FormatError::Category::kBadVersion: return "bad version";
    case FormatError::Category::kTruncated: return "truncated";
    case FormatError::Category::kSizeOverflow: return "size overflow";
    case FormatError::Category::kBadRank: return "bad rank";
    case FormatError::Category::kBadDimension: return "bad dimension";
    case FormatError::Category::kBadClassCount: return "bad class count";
    case FormatError::Category::kLabelOutOfRange: return "label out of range";
    case FormatError::Category::kTrailingData: return "trailing data";
  }
  return "unknown";
}

}  // namespace zdp

#endif  // ZDP_ERROR_H_
