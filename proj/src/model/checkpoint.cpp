#include "codessm/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace codessm::model {

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

namespace {

constexpr char kMagic[4] = {'C', 'S', 'S', 'M'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '.'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const NamedTensor& t) {
    str(t.name);
    le<std::uint32_t>(static_cast<std::uint32_t>(t.value.rank()));
    for (auto d : t.value.shape()) le<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float f : t.value.values()) le<std::uint32_t>(std::bit_cast<std::uint32_t>(f));
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}

  void need(std::size_t n, const char* field) {
    if (buf_.size() - pos_ < n) throw CheckpointError(std::string("checkpoint truncated while reading ") + field);
  }
  template <typename U>
  U le(const char* field) {
    need(sizeof(U), field);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::string str(const char* field, std::size_t max_len = 1u << 24) {
    const auto n = le<std::uint32_t>(field);
    if (n > max_len) throw CheckpointError(std::string("checkpoint field ") + field + " has implausible length");
    need(n, field);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void expect(const char (&tag)[4], const char* field) {
    need(4, field);
    if (std::memcmp(buf_.data() + pos_, tag, 4) != 0) throw CheckpointError(std::string("bad ") + field);
    pos_ += 4;
  }
  NamedTensor tensor() {
    NamedTensor t;
    t.name = str("tensor name", 4096);
    const auto rank = le<std::uint32_t>("tensor rank");
    if (rank == 0 || rank > 8) throw CheckpointError("tensor '" + t.name + "' has invalid rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = le<std::uint32_t>("tensor shape");
      if (d == 0) throw CheckpointError("tensor '" + t.name + "' has a zero dimension");
      count *= d;
      if (count > (buf_.size() - pos_) / 4 + 1) throw CheckpointError("checkpoint truncated in tensor '" + t.name + "'");
    }
    need(count * 4, ("tensor '" + t.name + "' data").c_str());
    t.value = Tensor<float>(shape);
    for (auto& f : t.value.values()) f = std::bit_cast<float>(le<std::uint32_t>("tensor data"));
    return t;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(Checkpoint::kVersion);
  w.le<std::uint64_t>(ckpt.config.hash());
  w.str(ckpt.config.to_json().dump());
  w.str(ckpt.metadata.dump());
  w.le<std::uint64_t>(ckpt.step);
  w.le<std::uint64_t>(ckpt.rng.seed());
  w.le<std::uint64_t>(ckpt.rng.position());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) w.tensor(t);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.optimizer.size()));
  for (const auto& t : ckpt.optimizer) w.tensor(t);
  w.le<std::uint64_t>(ckpt.optimizer_step);
  w.bytes(kTrailer, 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  r.expect(kMagic, "magic bytes");
  const auto version = r.le<std::uint32_t>("version");
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto stored_hash = r.le<std::uint64_t>("config hash");
  const std::string config_text = r.str("config");
  if (fnv1a64(config_text) != stored_hash) throw CheckpointError("config hash mismatch");

  Checkpoint ckpt;
  try {
    ckpt.config = EncoderConfig::from_json(nlohmann::json::parse(config_text));
    ckpt.metadata = nlohmann::json::parse(r.str("metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed config: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid config: ") + e.what());
  }
  ckpt.step = r.le<std::uint64_t>("step");
  const auto seed = r.le<std::uint64_t>("rng seed");
  const auto position = r.le<std::uint64_t>("rng position");
  ckpt.rng = Rng(seed, position);
  const auto n = r.le<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < n; ++i) ckpt.tensors.push_back(r.tensor());
  const auto m = r.le<std::uint32_t>("optimizer tensor count");
  for (std::uint32_t i = 0; i < m; ++i) ckpt.optimizer.push_back(r.tensor());
  ckpt.optimizer_step = r.le<std::uint64_t>("optimizer step");
  r.expect(kTrailer, "trailer");
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint trailer");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.hash() != expected.hash()) {
    throw CheckpointError("checkpoint config " + ckpt.config.to_json().dump() + " does not match expected " +
                          expected.to_json().dump());
  }
  return ckpt;
}

std::vector<NamedTensor> export_params(const EncoderParams<float>& params, const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (const auto& r : param_refs(params, prefix)) out.push_back({r.name, *r.tensor});
  return out;
}

EncoderParams<float> import_params(const Checkpoint& ckpt, const std::string& prefix) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t.value;
  EncoderParams<float> params = init_params<float>(ckpt.config, 0);
  for (auto& r : param_refs(params, prefix)) {
    auto it = by_name.find(r.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint is missing tensor '" + r.name + "'");
    if (it->second->shape() != r.tensor->shape()) {
      throw CheckpointError("tensor '" + r.name + "' has shape " + shape_string(it->second->shape()) + ", expected " +
                            shape_string(r.tensor->shape()));
    }
    *r.tensor = *it->second;
  }
  return params;
}

}  // namespace codessm::model
