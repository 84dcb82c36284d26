#include "codessm/training/tokenizer.hpp"

namespace codessm::training {

std::vector<std::int32_t> ByteTokenizer::encode(std::string_view text) {
  std::vector<std::int32_t> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(byte_id(static_cast<unsigned char>(c)));
  return ids;
}

std::string ByteTokenizer::decode(const std::vector<std::int32_t>& ids) {
  static const char* names[] = {"<pad>", "<unk>", "<cls>", "<sep>", "<mask>"};
  std::string out;
  for (auto id : ids) {
    if (is_special(id)) {
      out += names[id];
    } else if (id >= kFirstByte && id < static_cast<std::int32_t>(kVocabSize)) {
      out += static_cast<char>(id - kFirstByte);
    } else {
      out += "<unk>";
    }
  }
  return out;
}

}  // namespace codessm::training
