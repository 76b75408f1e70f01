#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sdec/seq2seq.hpp"

namespace sdec {

namespace {

constexpr const char* kMagic = "sdec-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("checkpoint " + path + ": " + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  const auto& s = model.shape;
  out << kMagic << ' ' << kVersion << '\n';
  out << "shape source_vocab=" << s.source_vocab << " target_vocab=" << s.target_vocab
      << " embed=" << s.embed << " hidden=" << s.hidden
      << " attention_units=" << s.attention_units << " bidirectional=" << (s.bidirectional ? 1 : 0)
      << " attention=" << to_string(s.attention) << '\n';
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Tensor& t = model.params.tensor(i);
    out << "param " << model.params.name(i) << ' ' << t.rows << ' ' << t.cols << '\n';
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        if (c) out << ' ';
        out << hex(t.at(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) fail(path, "write failed");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) fail(path, "not a checkpoint file");
  if (version != kVersion) fail(path, "unsupported version " + std::to_string(version));

  Model m;
  std::string word;
  in >> word;
  if (word != "shape") fail(path, "missing shape line");
  std::string line;
  std::getline(in, line);
  std::istringstream fields(line);
  std::string kv;
  while (fields >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(path, "malformed shape field '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "attention") {
      m.shape.attention = parse_attention_mode(val);
      continue;
    }
    const auto n = static_cast<std::size_t>(std::stoull(val));
    if (key == "source_vocab") m.shape.source_vocab = n;
    else if (key == "target_vocab") m.shape.target_vocab = n;
    else if (key == "embed") m.shape.embed = n;
    else if (key == "hidden") m.shape.hidden = n;
    else if (key == "attention_units") m.shape.attention_units = n;
    else if (key == "bidirectional") m.shape.bidirectional = n != 0;
    else fail(path, "unknown shape field '" + key + "'");
  }
  m.shape.validate();

  while (in >> word) {
    if (word == "end") break;
    if (word != "param") fail(path, "expected 'param', got '" + word + "'");
    std::string name;
    std::size_t rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (!in) fail(path, "malformed header for parameter '" + name + "'");
    Tensor t(rows, cols);
    for (auto& v : t.data) {
      std::string tok;
      if (!(in >> tok)) fail(path, "truncated data for '" + name + "'");
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') fail(path, "bad value '" + tok + "' in '" + name + "'");
    }
    m.params.add(name, std::move(t));
  }
  if (word != "end") fail(path, "missing end marker");

  // Cross-check parameter shapes against a freshly shaped model.
  Rng dummy(0);
  const Model ref = Model::init(m.shape, dummy, 0.0);
  if (ref.params.size() != m.params.size()) fail(path, "parameter count does not match shape");
  for (std::size_t i = 0; i < ref.params.size(); ++i) {
    const auto& a = ref.params.tensor(i);
    const auto j = m.params.find(ref.params.name(i));
    if (!j) fail(path, "missing parameter '" + ref.params.name(i) + "'");
    const auto& b = m.params.tensor(*j);
    if (a.rows != b.rows || a.cols != b.cols) fail(path, "wrong shape for '" + ref.params.name(i) + "'");
  }
  return m;
}

}  // namespace sdec
