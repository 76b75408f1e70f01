#include "sdec/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sdec {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"name", "run", "run name; outputs go to <out>/<name>"},
      {"out", "runs", "output root directory"},
      {"data", "", "task directory with train/dev/test.tsv; empty generates from task.*"},
      {"regime", "CE", "CE, SS-hard-greedy, SS-hard-sample, relaxed-greedy, relaxed-sample"},
      {"epochs", "10", "training epochs"},
      {"lr", "0.1", "SGD learning rate"},
      {"clip", "5", "global gradient-norm clip"},
      {"seed", "1", "run seed (init/data/mixing/gumbel sub-streams)"},
      {"seeds", "", "comma-separated restart seeds; empty uses seed"},
      {"metric", "", "accuracy, f1 or bleu; empty picks f1 for tagger, else accuracy"},
      {"wallclock", "false", "record elapsed seconds in metrics.csv (breaks bit-exact reruns)"},
      {"task.kind", "chain", "copy, reverse, chain or tagger"},
      {"task.vocab", "20", "source vocabulary size including reserved ids"},
      {"task.min_len", "4", "minimum source length"},
      {"task.max_len", "8", "maximum source length"},
      {"task.train", "500", "training pairs"},
      {"task.dev", "100", "dev pairs"},
      {"task.test", "100", "test pairs"},
      {"task.seed", "1", "generation seed"},
      {"mixing.kind", "inverse-sigmoid", "inverse-sigmoid, constant or always-sample"},
      {"mixing.k", "10", "inverse-sigmoid decay strength"},
      {"mixing.eps", "1", "gold probability for the constant schedule"},
      {"temp.kind", "fixed", "fixed or exponential"},
      {"temp.alpha0", "1", "initial soft-argmax temperature"},
      {"temp.rate", "1.5", "per-epoch factor of the exponential schedule"},
      {"model.embed", "16", "embedding size"},
      {"model.hidden", "32", "LSTM units"},
      {"model.attention_units", "32", "hidden size of the additive attention layer"},
      {"model.attention", "learned", "learned, fixed or none"},
      {"model.bidirectional", "true", "bidirectional encoder"},
      {"model.init_scale", "0.08", "uniform init half-width"},
      {"model.checkpoint", "", "load parameters instead of initializing (gradcheck, sweep)"},
      {"gradcheck.step", "1e-5", "central-difference step"},
      {"gradcheck.tol", "1e-4", "maximum accepted relative error"},
      {"gradcheck.eps", "0", "gold mixing probability during the check"},
      {"gradcheck.pair", "0", "index of the training pair to check"},
      {"sweep.param", "", "parameter selector, name[i] or name[r,c]"},
      {"sweep.lo", "-1", "sweep range start"},
      {"sweep.hi", "1", "sweep range end"},
      {"sweep.points", "101", "grid points"},
      {"sweep.alphas", "1,5", "comma-separated temperatures for relaxed curves"},
      {"sweep.eps", "0", "gold mixing probability along the sweep"},
      {"sweep.pair", "0", "index of the training pair to sweep"},
      {"sweep.out", "", "CSV path; empty writes <out>/<name>/sweep.csv"},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_known(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return true;
  }
  return false;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!is_known(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    c.values_[key] = value;
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

void Config::apply_overrides(const std::vector<std::string>& args) {
  for (const auto& a : args) {
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' must be --key=value");
    const std::string key = a.substr(2, eq - 2);
    if (!is_known(key)) throw ConfigError("unknown flag '--" + key + "'");
    values_[key] = a.substr(eq + 1);
  }
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return d;
}

long long Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const long long n = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return n;
}

std::size_t Config::get_size(const std::string& key) const {
  const long long n = get_int(key);
  if (n < 0) throw ConfigError("key '" + key + "': must be non-negative");
  return static_cast<std::size_t>(n);
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_commas(get(key))) {
    char* end = nullptr;
    const double d = std::strtod(item.c_str(), &end);
    if (*end != '\0') throw ConfigError("key '" + key + "': bad number '" + item + "'");
    out.push_back(d);
  }
  return out;
}

std::vector<std::uint64_t> Config::get_seeds() const {
  const auto items = split_commas(get("seeds"));
  if (items.empty()) {
    const long long s = get_int("seed");
    if (s < 0) throw ConfigError("key 'seed': must be non-negative");
    return {static_cast<std::uint64_t>(s)};
  }
  std::vector<std::uint64_t> out;
  for (const auto& item : items) {
    char* end = nullptr;
    const unsigned long long s = std::strtoull(item.c_str(), &end, 10);
    if (*end != '\0' || item[0] == '-') throw ConfigError("key 'seeds': bad seed '" + item + "'");
    out.push_back(s);
  }
  return out;
}

std::string Config::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace sdec
