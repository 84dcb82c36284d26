#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codessm::training {

/// Byte-level tokenizer: five special ids followed by the 256 byte values.
struct ByteTokenizer {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::int32_t kMask = 4;
  static constexpr std::int32_t kFirstByte = 5;
  static constexpr std::size_t kVocabSize = 261;

  static bool is_special(std::int32_t id) noexcept { return id >= 0 && id < kFirstByte; }
  static std::vector<std::int32_t> special_ids() { return {kPad, kUnk, kCls, kSep, kMask}; }

  static std::int32_t byte_id(unsigned char b) noexcept { return kFirstByte + b; }
  static std::vector<std::int32_t> encode(std::string_view text);
  /// Special ids render as "<pad>", "<unk>", "<cls>", "<sep>", "<mask>".
  static std::string decode(const std::vector<std::int32_t>& ids);
};

}  // namespace codessm::training
