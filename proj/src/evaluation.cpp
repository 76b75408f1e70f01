#include "sdec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace sdec {

double MetricReport::support_value(std::string_view key) const {
  for (const auto& [k, v] : support) {
    if (k == key) return v;
  }
  throw std::out_of_range("metric report has no support entry '" + std::string(key) + "'");
}

std::string MetricReport::format() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", name == "BLEU" ? 100.0 * value : value);
  std::string out = name + "=" + buf + " support=";
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.10g", support[i].second);
    out += support[i].first + ":" + buf;
  }
  return out;
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::f1: return "f1";
    case MetricKind::bleu: return "bleu";
  }
  return "?";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "accuracy") return MetricKind::accuracy;
  if (name == "f1") return MetricKind::f1;
  if (name == "bleu") return MetricKind::bleu;
  throw std::invalid_argument("unknown metric '" + std::string(name) +
                              "' (expected accuracy, f1 or bleu)");
}

MetricReport token_accuracy(const std::vector<std::vector<int>>& pred,
                            const std::vector<std::vector<int>>& gold) {
  if (gold.empty()) throw std::invalid_argument("token_accuracy: empty corpus");
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("token_accuracy: corpus sizes differ (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(gold.size()) + ")");
  }
  double matches = 0;
  double total = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const std::size_t n = std::min(pred[k].size(), gold[k].size());
    for (std::size_t i = 0; i < n; ++i) matches += pred[k][i] == gold[k][i] ? 1 : 0;
    total += static_cast<double>(gold[k].size());
  }
  MetricReport r;
  r.name = "token-accuracy";
  r.value = total > 0 ? matches / total : 0.0;
  r.support = {{"matched", matches}, {"gold", total}};
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Returns {prefix, type}; prefix is 'O', 'B' or 'I'.
std::pair<char, std::string> parse_tag(const std::string& tag) {
  if (tag == "O") return {'O', ""};
  if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], tag.substr(2)};
  }
  throw std::invalid_argument("malformed BIO tag '" + tag + "'");
}

}  // namespace

std::vector<EntitySpan> extract_spans(const std::vector<std::string>& tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  EntitySpan cur;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto [prefix, type] = parse_tag(tags[i]);
    const bool continues = open && prefix == 'I' && type == cur.type;
    if (continues) {
      cur.end = i;
      continue;
    }
    if (open) spans.push_back(cur);
    open = prefix != 'O';
    if (open) cur = {i, i, type};
  }
  if (open) spans.push_back(cur);
  return spans;
}

MetricReport entity_f1(const std::vector<std::vector<std::string>>& pred,
                       const std::vector<std::vector<std::string>>& gold) {
  if (pred.size() != gold.size()) throw std::invalid_argument("entity_f1: corpus sizes differ");
  double matched = 0;
  double n_pred = 0;
  double n_gold = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (pred[k].size() != gold[k].size()) {
      throw std::invalid_argument("entity_f1: sequence " + std::to_string(k) + " has " +
                                  std::to_string(pred[k].size()) + " predicted vs " +
                                  std::to_string(gold[k].size()) + " gold tags");
    }
    const auto ps = extract_spans(pred[k]);
    const auto gs = extract_spans(gold[k]);
    const std::set<EntitySpan> gset(gs.begin(), gs.end());
    for (const auto& s : ps) matched += gset.count(s) ? 1 : 0;
    n_pred += static_cast<double>(ps.size());
    n_gold += static_cast<double>(gs.size());
  }
  const double p = n_pred > 0 ? matched / n_pred : 0.0;
  const double r = n_gold > 0 ? matched / n_gold : 0.0;
  MetricReport rep;
  rep.name = "F1";
  rep.value = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  rep.support = {{"matched", matched}, {"predicted", n_pred}, {"gold", n_gold},
                 {"precision", p},     {"recall", r}};
  return rep;
}

// ---------------------------------------------------------------------------

MetricReport corpus_bleu(const std::vector<std::vector<int>>& pred,
                         const std::vector<std::vector<int>>& ref, std::size_t max_n) {
  if (pred.empty()) throw std::invalid_argument("corpus_bleu: empty prediction corpus");
  if (pred.size() != ref.size()) throw std::invalid_argument("corpus_bleu: corpus sizes differ");
  if (max_n == 0) throw std::invalid_argument("corpus_bleu: max_n must be >= 1");

  std::vector<double> matches(max_n, 0.0);
  std::vector<double> totals(max_n, 0.0);
  double cand_len = 0;
  double ref_len = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const auto& c = pred[k];
    const auto& r = ref[k];
    cand_len += static_cast<double>(c.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= max_n; ++n) {
      if (c.size() < n) continue;
      std::map<std::vector<int>, int> ref_counts;
      if (r.size() >= n) {
        for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[{r.begin() + i, r.begin() + i + n}];
      }
      std::map<std::vector<int>, int> cand_counts;
      for (std::size_t i = 0; i + n <= c.size(); ++i) ++cand_counts[{c.begin() + i, c.begin() + i + n}];
      for (const auto& [gram, cnt] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(cnt, it->second);
        totals[n - 1] += cnt;
      }
    }
  }

  MetricReport rep;
  rep.name = "BLEU";
  std::vector<double> precisions(max_n, 0.0);
  bool defined = cand_len > 0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (totals[n] == 0) {
      defined = false;
      continue;
    }
    precisions[n] = (matches[n] > 0 ? matches[n] : kBleuSmoothing) / totals[n];
    log_sum += std::log(precisions[n]);
  }
  const double bp = cand_len > 0 ? std::exp(std::min(0.0, 1.0 - ref_len / cand_len)) : 0.0;
  rep.value = defined ? bp * std::exp(log_sum / static_cast<double>(max_n)) : 0.0;
  for (std::size_t n = 0; n < max_n; ++n) rep.support.emplace_back("p" + std::to_string(n + 1), precisions[n]);
  rep.support.emplace_back("bp", bp);
  rep.support.emplace_back("cand_len", cand_len);
  rep.support.emplace_back("ref_len", ref_len);
  return rep;
}

}  // namespace sdec
