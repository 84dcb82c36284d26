#include "codessm/tasks/synthetic.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "codessm/tasks/metrics.hpp"

namespace codessm::tasks {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Retrieval: return "retrieval";
    case TaskKind::SeqClass: return "seq_class";
    case TaskKind::PairClass: return "pair_class";
    case TaskKind::TokenClass: return "token_class";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  for (auto k : {TaskKind::Retrieval, TaskKind::SeqClass, TaskKind::PairClass, TaskKind::TokenClass})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown task '" + s + "' (expected retrieval, seq_class, pair_class or token_class)");
}

void TaskSpec::validate() const {
  if ((kind == TaskKind::SeqClass || kind == TaskKind::PairClass) && n_labels < 2) {
    throw ConfigError("n_labels must be >= 2");
  }
  if (kind == TaskKind::TokenClass && (unk_id < 0 || static_cast<std::size_t>(unk_id) >= n_types)) {
    throw ConfigError("unk_id must lie in [0, n_types)");
  }
  if (context_length < 2) throw ConfigError("context_length must be >= 2");
}

nlohmann::json TaskSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"n_labels", n_labels},         {"n_types", n_types},
          {"unk_id", unk_id},        {"pooling", to_string(pooling)}, {"context_length", context_length}};
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j) {
  TaskSpec s;
  try {
    for (const auto& [k, _] : j.items()) {
      if (k != "kind" && k != "n_labels" && k != "n_types" && k != "unk_id" && k != "pooling" &&
          k != "context_length") {
        throw ConfigError("unknown task spec key '" + k + "'");
      }
    }
    s.kind = task_kind_from_string(j.at("kind").get<std::string>());
    s.n_labels = j.value("n_labels", s.n_labels);
    s.n_types = j.value("n_types", s.n_types);
    s.unk_id = j.value("unk_id", s.unk_id);
    s.pooling = pooling_from_string(j.value("pooling", std::string("mean")));
    s.context_length = j.value("context_length", s.context_length);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed task spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

constexpr std::array kVerbs{"sum", "sort", "filter", "count", "merge", "split", "reverse", "scale"};
constexpr std::array kNouns{"items", "values", "names", "rows", "scores", "tokens", "nodes", "lines"};
constexpr std::array kIdents{"a", "b", "c", "n", "m", "k", "s", "t", "u", "w"};

template <typename Pool>
std::string pick(const Pool& pool, Rng& rng) {
  return pool[rng.uniform_int(pool.size())];
}

template <typename V>
void shuffle(std::vector<V>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

std::string snippet(const std::string& verb, const std::string& noun, const std::vector<std::string>& ids, Rng& rng) {
  const auto& x = ids[0];
  const auto& y = ids[1];
  std::string s = "def " + verb + "_" + noun + "(" + x + "):\n";
  s += "    " + y + " = []\n";
  s += "    for v in " + x + ":\n";
  s += "        " + y + ".append(v * " + std::to_string(1 + rng.uniform_int(9)) + ")\n";
  s += "    return " + y + "\n";
  return s;
}

Dataset retrieval(std::size_t size, Rng& rng) {
  Dataset d;
  d.spec.kind = TaskKind::Retrieval;
  for (std::size_t i = 0; i < size; ++i) {
    const auto verb = pick(kVerbs, rng), noun = pick(kNouns, rng);
    const std::string rare = "qz" + std::to_string(1000 + rng.uniform_int(9000));
    Example e;
    e.text_a = verb + " the " + noun + " of " + rare;
    e.text_b = snippet(verb, noun, {rare, pick(kIdents, rng)}, rng);
    d.examples.push_back(std::move(e));
  }
  return d;
}

Dataset seq_class(std::size_t size, Rng& rng) {
  Dataset d;
  d.spec.kind = TaskKind::SeqClass;
  d.spec.n_labels = 4;
  std::vector<int> labels(size);
  for (std::size_t i = 0; i < size; ++i) labels[i] = static_cast<int>(i % d.spec.n_labels);
  shuffle(labels, rng);
  for (int label : labels) {
    const int depth = label + 1;
    const std::size_t lines = 3 + rng.uniform_int(4);
    const std::size_t deep_line = rng.uniform_int(lines);
    std::string text;
    for (std::size_t l = 0; l < lines; ++l) {
      const int nest = l == deep_line ? depth : static_cast<int>(1 + rng.uniform_int(depth));
      std::string expr = pick(kIdents, rng);
      for (int k = 0; k < nest; ++k) expr = pick(kVerbs, rng) + "(" + expr + ")";
      text += pick(kIdents, rng) + " = " + expr + "\n";
    }
    d.examples.push_back({std::move(text), "", label, {}});
  }
  return d;
}

std::string rename(const std::string& code, const std::map<std::string, std::string>& names) {
  std::string out;
  std::size_t i = 0;
  while (i < code.size()) {
    if (std::isalpha(static_cast<unsigned char>(code[i])) || code[i] == '_') {
      std::size_t j = i;
      while (j < code.size() && (std::isalnum(static_cast<unsigned char>(code[j])) || code[j] == '_')) ++j;
      const std::string word = code.substr(i, j - i);
      auto it = names.find(word);
      out += it == names.end() ? word : it->second;
      i = j;
    } else {
      out += code[i++];
    }
  }
  return out;
}

Dataset pair_class(std::size_t size, Rng& rng) {
  Dataset d;
  d.spec.kind = TaskKind::PairClass;
  d.spec.n_labels = 2;
  const std::size_t positives = std::max<std::size_t>(1, size * 15 / 100);
  std::vector<int> labels(size, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  shuffle(labels, rng);
  for (int label : labels) {
    const auto verb = pick(kVerbs, rng), noun = pick(kNouns, rng);
    const std::string x = pick(kIdents, rng), y = "out";
    Example e;
    e.text_a = snippet(verb, noun, {x, y}, rng);
    e.label = label;
    if (label == 1) {
      e.text_b = rename(e.text_a, {{x, x + "_in"}, {y, "res"}, {"v", "elem"}, {verb + "_" + noun, verb + "_all"}});
    } else {
      std::string other_verb = pick(kVerbs, rng);
      while (other_verb == verb) other_verb = pick(kVerbs, rng);
      std::string b = "def " + other_verb + "_" + noun + "(" + x + "):\n";
      b += "    if not " + x + ":\n        return None\n";
      b += "    return " + other_verb + "(" + x + ")\n";
      e.text_b = std::move(b);
    }
    d.examples.push_back(std::move(e));
  }
  return d;
}

constexpr std::array kTypeNames{"int", "str", "bool", "float", "list"};
constexpr int kUnkType = 5;

std::string literal(int type, Rng& rng) {
  switch (type) {
    case 0: return std::to_string(rng.uniform_int(100));
    case 1: return "\"" + pick(kNouns, rng) + "\"";
    case 2: return rng.bernoulli(0.5) ? "True" : "False";
    case 3: return std::to_string(rng.uniform_int(10)) + ".5";
    default: return "[" + std::to_string(rng.uniform_int(10)) + "]";
  }
}

Dataset token_class(std::size_t size, Rng& rng) {
  Dataset d;
  d.spec.kind = TaskKind::TokenClass;
  d.spec.n_types = kTypeNames.size() + 1;
  d.spec.unk_id = kUnkType;
  for (std::size_t i = 0; i < size; ++i) {
    Example e;
    auto emit = [&](const std::string& s, int type_of_first) {
      const std::size_t start = e.text_a.size();
      e.text_a += s;
      e.token_types.resize(e.text_a.size(), kUnannotated);
      if (type_of_first != kUnannotated) e.token_types[start] = type_of_first;
    };
    std::vector<std::pair<std::string, int>> vars;
    const std::size_t n_decl = 3 + rng.uniform_int(3);
    for (std::size_t v = 0; v < n_decl; ++v) {
      const std::string name = std::string(1, static_cast<char>('a' + v)) + std::to_string(rng.uniform_int(10));
      const int type = static_cast<int>(rng.uniform_int(kTypeNames.size()));
      vars.emplace_back(name, type);
      // The declared type is visible right next to the name.
      emit(name, type);
      emit(std::string(": ") + kTypeNames[type] + " = " + literal(type, rng) + "\n", kUnannotated);
    }
    const std::string opaque = "r" + std::to_string(rng.uniform_int(10));
    const auto& arg = vars[rng.uniform_int(vars.size())].first;
    emit(opaque, kUnkType);
    emit(" = func(" + arg + ")\n", kUnannotated);
    for (std::size_t f = 0; f < 2 + rng.uniform_int(3); ++f) emit("log(\"" + pick(kNouns, rng) + "\")\n", kUnannotated);
    // Uses resolve only through the declarations above.
    const std::size_t n_use = 3 + rng.uniform_int(3);
    for (std::size_t u = 0; u < n_use; ++u) {
      emit("print(", kUnannotated);
      if (rng.bernoulli(0.2)) {
        emit(opaque, kUnkType);
      } else {
        const auto& [name, type] = vars[rng.uniform_int(vars.size())];
        emit(name, type);
      }
      emit(")\n", kUnannotated);
    }
    d.examples.push_back(std::move(e));
  }
  return d;
}

}  // namespace

Dataset generate_synthetic_task(TaskKind kind, std::size_t size, std::uint64_t seed) {
  if (size < 10) throw ConfigError("synthetic datasets need size >= 10, got " + std::to_string(size));
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(kind));
  Dataset d;
  switch (kind) {
    case TaskKind::Retrieval: d = retrieval(size, rng); break;
    case TaskKind::SeqClass: d = seq_class(size, rng); break;
    case TaskKind::PairClass: d = pair_class(size, rng); break;
    case TaskKind::TokenClass: d = token_class(size, rng); break;
  }
  d.spec.validate();
  return d;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << nlohmann::json{{"spec", data.spec.to_json()}}.dump() << '\n';
  for (const auto& e : data.examples) {
    nlohmann::json j{{"text_a", e.text_a}, {"label", e.label}};
    if (!e.text_b.empty()) j["text_b"] = e.text_b;
    if (!e.token_types.empty()) j["token_types"] = e.token_types;
    out << j.dump() << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  bool have_spec = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_spec) {
        d.spec = TaskSpec::from_json(j.at("spec"));
        have_spec = true;
        continue;
      }
      Example e;
      e.text_a = j.at("text_a").get<std::string>();
      e.text_b = j.value("text_b", std::string());
      e.label = j.value("label", 0);
      e.token_types = j.value("token_types", std::vector<int>{});
      if (!e.token_types.empty() && e.token_types.size() != e.text_a.size()) {
        throw ConfigError("token_types length differs from text_a");
      }
      d.examples.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!have_spec) throw ConfigError(path.string() + ": missing spec record");
  return d;
}

}  // namespace codessm::tasks
