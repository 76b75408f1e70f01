#pragma once

// Synthetic sequence tasks, vocabularies and TSV corpus files.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdec/seq2seq.hpp"

namespace sdec {

/// Token strings <-> dense ids. Ids 0, 1, 2 are SOS, EOS and UNK.
class Vocabulary {
 public:
  static constexpr std::string_view kSosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  /// Returns the id of `token`, adding it if new.
  int add(std::string_view token);
  /// Id of `token`, or UNK when absent.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Token ids; the target always ends with EOS.
struct SequencePair {
  std::vector<int> source;
  std::vector<int> target;
  bool operator==(const SequencePair&) const = default;
};

/// Raw tokens as stored in a corpus file (no EOS).
struct TextPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  bool operator==(const TextPair&) const = default;
};

using Corpus = std::vector<SequencePair>;

enum class TaskKind { copy, reverse, chain, tagger };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::chain;
  std::size_t vocab = 20;  // source-side vocabulary size, reserved ids included
  std::size_t min_len = 4;
  std::size_t max_len = 8;
  std::size_t train = 500;
  std::size_t dev = 100;
  std::size_t test = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TaskData {
  TaskKind kind = TaskKind::chain;
  Vocabulary vocab;
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// BIO tag inventory of the tagger task.
const std::vector<std::string>& tagger_tags();

/// Seeded permutation over content indices [0, vocab - 3) used by the chain
/// task: t_0 = perm[x_0], t_i = perm[(t_{i-1} + x_i) mod n] on content indices.
std::vector<int> chain_permutation(const TaskSpec& spec);

/// Entity class (0 = none, 1..4 = PER, LOC, ORG, MISC) of each content
/// index for the tagger task.
std::vector<int> tagger_classes(const TaskSpec& spec);

/// Train/dev/test corpora; a pure function of `spec`. Sources are unique
/// across all three splits.
TaskData generate(const TaskSpec& spec);

std::vector<TextPair> read_corpus(const std::string& path);
void write_corpus(const std::string& path, std::span<const TextPair> pairs);

/// Ids by first appearance: per pair, source tokens then target tokens.
Vocabulary build_vocab(std::span<const std::vector<TextPair>> corpora);

void write_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::string& path);

SequencePair encode_pair(const TextPair& pair, const Vocabulary& vocab);
TextPair decode_pair(const SequencePair& pair, const Vocabulary& vocab);

/// Writes `<dir>/{train,dev,test}.tsv` and `<dir>/vocab.txt`.
void write_task(const std::string& dir, const TaskData& data);
/// Reads a directory produced by write_task. The vocabulary comes from
/// vocab.txt when present, otherwise it is built from the three splits.
TaskData load_task(const std::string& dir, TaskKind kind);

}  // namespace sdec
