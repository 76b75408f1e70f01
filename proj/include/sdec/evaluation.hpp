#pragma once

// Token accuracy, span-level BIO F1 and corpus BLEU.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdec {

struct MetricReport {
  std::string name;
  double value = 0.0;  // in [0, 1]
  std::vector<std::pair<std::string, double>> support;

  double support_value(std::string_view key) const;
  /// "metric=value support=k1:v1,k2:v2"; BLEU printed x100.
  std::string format() const;
};

enum class MetricKind { accuracy, f1, bleu };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view name);

/// Position-wise matches over min(len) divided by total gold tokens.
MetricReport token_accuracy(const std::vector<std::vector<int>>& pred,
                            const std::vector<std::vector<int>>& gold);

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::string type;
  auto operator<=>(const EntitySpan&) const = default;
};

/// Chunks a BIO sequence. An I-X that does not continue an open X chunk
/// starts a new chunk, as in the CoNLL evaluation script.
std::vector<EntitySpan> extract_spans(const std::vector<std::string>& tags);

MetricReport entity_f1(const std::vector<std::vector<std::string>>& pred,
                       const std::vector<std::vector<std::string>>& gold);

/// Corpus BLEU with clipped n-gram counts, single reference, brevity
/// penalty exp(min(0, 1 - r/c)). An order with zero matches uses
/// 0.1 / (candidate n-grams of that order); an order with no candidate
/// n-grams at all makes the score 0.
MetricReport corpus_bleu(const std::vector<std::vector<int>>& pred,
                         const std::vector<std::vector<int>>& ref, std::size_t max_n = 4);

inline constexpr double kBleuSmoothing = 0.1;

}  // namespace sdec
