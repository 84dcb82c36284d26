#include "codessm/training/corpus.hpp"

#include <array>
#include <fstream>

#include <json.hpp>

#include "codessm/numerics/errors.hpp"
#include "codessm/training/tokenizer.hpp"

namespace codessm::training {

std::vector<std::string> read_jsonl_texts(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus " + path.string());
  std::vector<std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains(field) || !rec[field].is_string()) {
      throw ConfigError(where + ": record lacks string field '" + field + "'");
    }
    texts.push_back(rec[field].get<std::string>());
  }
  return texts;
}

void write_jsonl_texts(const std::filesystem::path& path, const std::vector<std::string>& texts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& t : texts) out << nlohmann::json{{"text", t}}.dump() << '\n';
}

namespace {

constexpr std::array kVerbs{"get", "set", "load", "save", "update", "compute", "parse", "build", "find", "count"};
constexpr std::array kNouns{"total", "items", "user", "config", "value", "index", "buffer", "record", "name", "score"};
constexpr std::array kVars{"x", "y", "n", "item", "value", "result", "count", "data", "key", "node", "size", "total"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& pool, Rng& rng) {
  return pool[rng.uniform_int(N)];
}

std::string indent(int depth) { return std::string(4 * depth, ' '); }

std::string expression(Rng& rng, const std::vector<std::string>& names) {
  const auto& a = names[rng.uniform_int(names.size())];
  const auto& b = names[rng.uniform_int(names.size())];
  switch (rng.uniform_int(5)) {
    case 0: return a + " + " + b;
    case 1: return a + " * " + std::to_string(rng.uniform_int(10));
    case 2: return "len(" + a + ")";
    case 3: return a + "[" + b + "]";
    default: return a + " - 1";
  }
}

void statements(std::string& out, Rng& rng, std::vector<std::string>& names, int depth, int budget) {
  for (int s = 0; s < budget; ++s) {
    const auto var = std::string(pick(kVars, rng));
    switch (rng.uniform_int(depth < 3 ? 5 : 3)) {
      case 0:
        out += indent(depth) + var + " = " + expression(rng, names) + "\n";
        names.push_back(var);
        break;
      case 1: out += indent(depth) + var + " += " + names[rng.uniform_int(names.size())] + "\n"; break;
      case 2:
        out += indent(depth) + "print(" + names[rng.uniform_int(names.size())] + ")\n";
        break;
      case 3:
        out += indent(depth) + "for " + var + " in " + names[rng.uniform_int(names.size())] + ":\n";
        names.push_back(var);
        statements(out, rng, names, depth + 1, 1 + static_cast<int>(rng.uniform_int(2)));
        break;
      default:
        out += indent(depth) + "if " + names[rng.uniform_int(names.size())] + " > " +
               std::to_string(rng.uniform_int(100)) + ":\n";
        statements(out, rng, names, depth + 1, 1 + static_cast<int>(rng.uniform_int(2)));
        break;
    }
  }
}

std::string function(Rng& rng) {
  std::string name = std::string(pick(kVerbs, rng)) + "_" + pick(kNouns, rng);
  std::vector<std::string> names;
  const auto n_args = 1 + rng.uniform_int(3);
  std::string args;
  for (std::uint64_t i = 0; i < n_args; ++i) {
    std::string a = pick(kVars, rng);
    if (i) args += ", ";
    args += a;
    names.push_back(a);
  }
  std::string out = "def " + name + "(" + args + "):\n";
  statements(out, rng, names, 1, 2 + static_cast<int>(rng.uniform_int(3)));
  out += "    return " + names[rng.uniform_int(names.size())] + "\n\n";
  return out;
}

}  // namespace

std::vector<std::string> synthetic_code_corpus(std::size_t n_docs, std::uint64_t seed) {
  const Rng base(seed);
  std::vector<std::string> docs;
  docs.reserve(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    Rng rng = base.fork(d);
    std::string doc;
    const auto n_functions = 3 + rng.uniform_int(4);
    for (std::uint64_t f = 0; f < n_functions; ++f) doc += function(rng);
    docs.push_back(std::move(doc));
  }
  return docs;
}

WindowSampler::WindowSampler(const std::vector<std::string>& docs, std::size_t seq_len) : seq_len_(seq_len) {
  if (seq_len == 0) throw ConfigError("seq_len must be >= 1");
  for (const auto& d : docs)
    if (!d.empty()) docs_.push_back(ByteTokenizer::encode(d));
  if (docs_.empty()) throw ConfigError("corpus is empty");
}

Batch WindowSampler::sample(std::size_t batch, Rng& rng) const {
  TokenIds ids({batch, seq_len_}, ByteTokenizer::kPad);
  std::vector<std::size_t> lengths(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& doc = docs_[rng.uniform_int(docs_.size())];
    const std::size_t slack = doc.size() > seq_len_ ? doc.size() - seq_len_ : 0;
    const std::size_t offset = rng.uniform_int(slack + 1);
    lengths[b] = std::min(seq_len_, doc.size());
    for (std::size_t t = 0; t < lengths[b]; ++t) ids[b * seq_len_ + t] = doc[offset + t];
  }
  return {std::move(ids), PadMask(seq_len_, std::move(lengths))};
}

std::vector<Batch> WindowSampler::sequential(std::size_t batch, std::size_t max_windows) const {
  std::vector<std::pair<std::size_t, std::size_t>> windows;  // (doc, offset)
  for (std::size_t d = 0; d < docs_.size() && windows.size() < max_windows; ++d) {
    for (std::size_t off = 0; off < docs_[d].size() && windows.size() < max_windows; off += seq_len_) {
      windows.emplace_back(d, off);
    }
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t n = std::min(batch, windows.size() - start);
    TokenIds ids({n, seq_len_}, ByteTokenizer::kPad);
    std::vector<std::size_t> lengths(n);
    for (std::size_t b = 0; b < n; ++b) {
      const auto [d, off] = windows[start + b];
      lengths[b] = std::min(seq_len_, docs_[d].size() - off);
      for (std::size_t t = 0; t < lengths[b]; ++t) ids[b * seq_len_ + t] = docs_[d][off + t];
    }
    out.push_back({std::move(ids), PadMask(seq_len_, std::move(lengths))});
  }
  return out;
}

}  // namespace codessm::training
