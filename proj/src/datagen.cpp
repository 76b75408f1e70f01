#include "sdec/datagen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdec {

Vocabulary::Vocabulary() {
  add(kSosToken);
  add(kEosToken);
  add(kUnkToken);
}

int Vocabulary::add(std::string_view token) {
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::copy: return "copy";
    case TaskKind::reverse: return "reverse";
    case TaskKind::chain: return "chain";
    case TaskKind::tagger: return "tagger";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "copy") return TaskKind::copy;
  if (name == "reverse") return TaskKind::reverse;
  if (name == "chain") return TaskKind::chain;
  if (name == "tagger") return TaskKind::tagger;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected copy, reverse, chain or tagger)");
}

void TaskSpec::validate() const {
  if (vocab < 5) throw std::invalid_argument("task: vocab must be >= 5 (3 reserved ids + 2 tokens)");
  if (min_len < 1 || max_len < min_len) throw std::invalid_argument("task: need 1 <= min_len <= max_len");
  if (train < 1 || dev < 1 || test < 1) throw std::invalid_argument("task: split sizes must be >= 1");
}

const std::vector<std::string>& tagger_tags() {
  static const std::vector<std::string> tags = {"O",     "B-PER", "I-PER",  "B-LOC", "I-LOC",
                                                "B-ORG", "I-ORG", "B-MISC", "I-MISC"};
  return tags;
}

namespace {

constexpr std::uint64_t kChainStream = 100;
constexpr std::uint64_t kTaggerStream = 101;
constexpr int kFirstContent = 3;

std::string content_token(int content_index) {
  return "w" + std::to_string(content_index + kFirstContent);
}

}  // namespace

std::vector<int> chain_permutation(const TaskSpec& spec) {
  spec.validate();
  std::vector<int> perm(spec.vocab - kFirstContent);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  Rng rng(spec.seed, kChainStream);
  rng.shuffle(perm);
  return perm;
}

std::vector<int> tagger_classes(const TaskSpec& spec) {
  spec.validate();
  std::vector<int> cls(spec.vocab - kFirstContent);
  Rng rng(spec.seed, kTaggerStream);
  for (auto& c : cls) c = rng.uniform() < 0.4 ? 0 : 1 + static_cast<int>(rng.below(4));
  return cls;
}

TaskData generate(const TaskSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(spec.vocab) - kFirstContent;

  TaskData data;
  data.kind = spec.kind;
  for (int c = 0; c < n; ++c) data.vocab.add(content_token(c));
  int first_tag = 0;
  if (spec.kind == TaskKind::tagger) {
    first_tag = static_cast<int>(data.vocab.size());
    for (const auto& t : tagger_tags()) data.vocab.add(t);
  }

  const std::vector<int> perm =
      spec.kind == TaskKind::chain ? chain_permutation(spec) : std::vector<int>{};
  const std::vector<int> classes =
      spec.kind == TaskKind::tagger ? tagger_classes(spec) : std::vector<int>{};

  // Targets in content-index space (tag index space for the tagger).
  auto make_target = [&](const std::vector<int>& src) {
    std::vector<int> tgt;
    switch (spec.kind) {
      case TaskKind::copy:
        tgt = src;
        break;
      case TaskKind::reverse:
        tgt.assign(src.rbegin(), src.rend());
        break;
      case TaskKind::chain:
        for (std::size_t i = 0; i < src.size(); ++i) {
          const int arg = i == 0 ? src[0] : (tgt[i - 1] + src[i]) % n;
          tgt.push_back(perm[static_cast<std::size_t>(arg)]);
        }
        break;
      case TaskKind::tagger:
        for (std::size_t i = 0; i < src.size(); ++i) {
          const int cls = classes[static_cast<std::size_t>(src[i])];
          if (cls == 0) {
            tgt.push_back(0);
          } else {
            const bool inside = i > 0 && classes[static_cast<std::size_t>(src[i - 1])] == cls;
            tgt.push_back(2 * cls - (inside ? 0 : 1));
          }
        }
        break;
    }
    return tgt;
  };

  Rng rng(spec.seed, Stream::task);
  std::set<std::vector<int>> seen;
  const std::size_t total = spec.train + spec.dev + spec.test;
  const std::size_t max_attempts = 100 * total + 1000;
  std::size_t attempts = 0;
  Corpus all;
  all.reserve(total);
  while (all.size() < total) {
    if (++attempts > max_attempts) {
      throw std::invalid_argument("task: cannot draw " + std::to_string(total) +
                                  " distinct sources; enlarge vocab or lengths");
    }
    const std::size_t len =
        spec.min_len + static_cast<std::size_t>(rng.below(spec.max_len - spec.min_len + 1));
    std::vector<int> src(len);
    for (auto& x : src) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (!seen.insert(src).second) continue;
    std::vector<int> tgt = make_target(src);

    SequencePair p;
    for (int x : src) p.source.push_back(x + kFirstContent);
    const int offset = spec.kind == TaskKind::tagger ? first_tag : kFirstContent;
    for (int y : tgt) p.target.push_back(y + offset);
    p.target.push_back(kEos);
    all.push_back(std::move(p));
  }

  data.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.train));
  data.dev.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.train),
                  all.begin() + static_cast<std::ptrdiff_t>(spec.train + spec.dev));
  data.test.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.train + spec.dev), all.end());
  return data;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

std::vector<TextPair> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  std::vector<TextPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    auto where = [&] { return path + ":" + std::to_string(lineno); };
    if (tab == std::string::npos) throw std::runtime_error(where() + ": missing TAB separator");
    if (line.find('\t', tab + 1) != std::string::npos) {
      throw std::runtime_error(where() + ": more than one TAB");
    }
    TextPair p{split_tokens(std::string_view(line).substr(0, tab)),
               split_tokens(std::string_view(line).substr(tab + 1))};
    if (p.source.empty()) throw std::runtime_error(where() + ": empty source");
    if (p.target.empty()) throw std::runtime_error(where() + ": empty target");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_corpus(const std::string& path, std::span<const TextPair> pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus " + path);
  for (const auto& p : pairs) out << join(p.source) << '\t' << join(p.target) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

Vocabulary build_vocab(std::span<const std::vector<TextPair>> corpora) {
  Vocabulary v;
  for (const auto& corpus : corpora) {
    for (const auto& p : corpus) {
      for (const auto& t : p.source) v.add(t);
      for (const auto& t : p.target) v.add(t);
    }
  }
  return v;
}

void write_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path);
  for (const auto& t : vocab.tokens()) out << t << '\n';
}

Vocabulary read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path);
  Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= 3) {
      if (line != v.token(static_cast<int>(lineno - 1))) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected reserved token " +
                                 v.token(static_cast<int>(lineno - 1)));
      }
      continue;
    }
    if (line.empty() || v.contains(line)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty or duplicate token");
    }
    v.add(line);
  }
  return v;
}

SequencePair encode_pair(const TextPair& pair, const Vocabulary& vocab) {
  SequencePair p;
  for (const auto& t : pair.source) p.source.push_back(vocab.id(t));
  for (const auto& t : pair.target) p.target.push_back(vocab.id(t));
  p.target.push_back(kEos);
  return p;
}

TextPair decode_pair(const SequencePair& pair, const Vocabulary& vocab) {
  TextPair p;
  for (int id : pair.source) p.source.push_back(vocab.token(id));
  for (int id : pair.target) {
    if (id == kEos) break;
    p.target.push_back(vocab.token(id));
  }
  return p;
}

void write_task(const std::string& dir, const TaskData& data) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const Corpus& c, const std::string& name) {
    std::vector<TextPair> text;
    text.reserve(c.size());
    for (const auto& p : c) text.push_back(decode_pair(p, data.vocab));
    write_corpus(dir + "/" + name, text);
  };
  dump(data.train, "train.tsv");
  dump(data.dev, "dev.tsv");
  dump(data.test, "test.tsv");
  write_vocab(dir + "/vocab.txt", data.vocab);
}

TaskData load_task(const std::string& dir, TaskKind kind) {
  const auto train = read_corpus(dir + "/train.tsv");
  const auto dev = read_corpus(dir + "/dev.tsv");
  const auto test = read_corpus(dir + "/test.tsv");
  TaskData data;
  data.kind = kind;
  if (std::filesystem::exists(dir + "/vocab.txt")) {
    data.vocab = read_vocab(dir + "/vocab.txt");
  } else {
    const std::vector<std::vector<TextPair>> all = {train, dev, test};
    data.vocab = build_vocab(all);
  }
  for (const auto& p : train) data.train.push_back(encode_pair(p, data.vocab));
  for (const auto& p : dev) data.dev.push_back(encode_pair(p, data.vocab));
  for (const auto& p : test) data.test.push_back(encode_pair(p, data.vocab));
  return data;
}

}  // namespace sdec
