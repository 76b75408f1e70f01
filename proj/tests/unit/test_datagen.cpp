#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "sdec/datagen.hpp"

using namespace sdec;

namespace {

TaskSpec spec_of(TaskKind kind, std::size_t train = 200) {
  TaskSpec s;
  s.kind = kind;
  s.train = train;
  s.dev = 50;
  s.test = 50;
  return s;
}

}  // namespace

TEST_CASE("vocabulary") {
  Vocabulary v;
  CHECK(v.size() == 3);
  CHECK(v.id("<s>") == kSos);
  CHECK(v.id("</s>") == kEos);
  CHECK(v.id("<unk>") == kUnk);
  CHECK(v.add("a") == 3);
  CHECK(v.add("a") == 3);
  CHECK(v.id("zzz") == kUnk);
  CHECK(v.token(3) == "a");
  CHECK_THROWS(v.token(17));
}

TEST_CASE("build_vocab from one pair") {
  const std::vector<std::vector<TextPair>> corpora = {{TextPair{{"a", "b"}, {"c"}}}};
  const Vocabulary v = build_vocab(corpora);
  CHECK(v.size() == 6);
  CHECK(v.tokens() == std::vector<std::string>{"<s>", "</s>", "<unk>", "a", "b", "c"});
  CHECK(encode_pair({{"a", "x"}, {"c"}}, v) == SequencePair{{3, kUnk}, {5, kEos}});
}

TEST_CASE("copy and reverse targets") {
  for (TaskKind kind : {TaskKind::copy, TaskKind::reverse}) {
    const TaskData d = generate(spec_of(kind));
    for (const auto& p : d.train) {
      std::vector<int> expect = p.source;
      if (kind == TaskKind::reverse) std::reverse(expect.begin(), expect.end());
      expect.push_back(kEos);
      CHECK(p.target == expect);
    }
  }
}

TEST_CASE("chain targets match an independent recomputation") {
  TaskSpec s = spec_of(TaskKind::chain, 1000);
  const TaskData d = generate(s);
  const std::vector<int> perm = chain_permutation(s);
  const int n = static_cast<int>(s.vocab) - 3;
  REQUIRE(perm.size() == static_cast<std::size_t>(n));
  CHECK(std::set<int>(perm.begin(), perm.end()).size() == perm.size());
  std::size_t checked = 0;
  for (const auto& p : d.train) {
    int prev = -1;
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      const int x = p.source[i] - 3;
      const int want = 3 + perm[i == 0 ? x : (prev + x) % n];
      CHECK(p.target[i] == want);
      prev = want - 3;
    }
    CHECK(p.target.back() == kEos);
    CHECK(p.target.size() == p.source.size() + 1);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("tagger emits well-formed BIO") {
  const TaskSpec s = spec_of(TaskKind::tagger);
  const TaskData d = generate(s);
  const auto classes = tagger_classes(s);
  const auto& tags = tagger_tags();
  CHECK(tags.size() == 9);
  for (const auto& p : d.train) {
    REQUIRE(p.target.size() == p.source.size() + 1);
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      const std::string& tag = d.vocab.token(p.target[i]);
      const int cls = classes[static_cast<std::size_t>(p.source[i] - 3)];
      if (cls == 0) {
        CHECK(tag == "O");
      } else {
        const bool inside = i > 0 && classes[static_cast<std::size_t>(p.source[i - 1] - 3)] == cls;
        CHECK(tag == (inside ? "I-" : "B-") + tags[2 * cls].substr(2));
      }
    }
  }
}

TEST_CASE("generation is a pure function of the task spec with unique sources") {
  const TaskSpec s = spec_of(TaskKind::chain);
  const TaskData a = generate(s), b = generate(s);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.test == b.test);
  std::set<std::vector<int>> sources;
  for (const Corpus* c : {&a.train, &a.dev, &a.test}) {
    for (const auto& p : *c) {
      CHECK(p.source.size() >= s.min_len);
      CHECK(p.source.size() <= s.max_len);
      sources.insert(p.source);
    }
  }
  CHECK(sources.size() == 300);

  TaskSpec other = s;
  other.seed = 2;
  CHECK(generate(other).train != a.train);
}

TEST_CASE("invalid task specs") {
  TaskSpec s;
  s.vocab = 4;
  CHECK_THROWS(generate(s));
  s = TaskSpec{};
  s.min_len = 5;
  s.max_len = 3;
  CHECK_THROWS(generate(s));
  s = TaskSpec{};
  s.vocab = 5;
  s.min_len = s.max_len = 1;  // only two distinct sources exist
  CHECK_THROWS(generate(s));
  CHECK_THROWS(parse_task_kind("sort"));
}

TEST_CASE("corpus files") {
  std::filesystem::create_directories("datagen_io");
  Rng rng(3);
  std::vector<TextPair> pairs;
  for (int i = 0; i < 100; ++i) {
    TextPair p;
    for (std::uint64_t k = 0, n = 1 + rng.below(6); k < n; ++k) p.source.push_back("s" + std::to_string(rng.below(9)));
    for (std::uint64_t k = 0, n = 1 + rng.below(6); k < n; ++k) p.target.push_back("t" + std::to_string(rng.below(9)));
    pairs.push_back(p);
  }
  write_corpus("datagen_io/c.tsv", pairs);
  CHECK(read_corpus("datagen_io/c.tsv") == pairs);

  std::ofstream("datagen_io/empty.tsv").close();
  CHECK(read_corpus("datagen_io/empty.tsv").empty());

  std::ofstream("datagen_io/bad.tsv") << "a b\tc\nno tab here\n";
  try {
    read_corpus("datagen_io/bad.tsv");
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS(read_corpus("datagen_io/missing.tsv"));
}

TEST_CASE("task directory round trip") {
  const TaskData d = generate(spec_of(TaskKind::tagger, 50));
  write_task("datagen_task", d);
  const TaskData back = load_task("datagen_task", TaskKind::tagger);
  CHECK(back.vocab == d.vocab);
  CHECK(back.train == d.train);
  CHECK(back.dev == d.dev);
  CHECK(back.test == d.test);
  CHECK(decode_pair(d.train[0], d.vocab).target.size() + 1 == d.train[0].target.size());
}
