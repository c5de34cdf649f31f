#include "alkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace alkit {

Direction direction_of(MetricId id) {
  return id == MetricId::perplexity ? Direction::lower_better
                                    : Direction::higher_better;
}

std::string to_string(MetricId id) {
  switch (id) {
    case MetricId::accuracy: return "accuracy";
    case MetricId::f1: return "f1";
    case MetricId::perplexity: return "ppl";
    case MetricId::bleu: return "bleu";
  }
  return "?";
}

MetricId metric_from_string(const std::string& s) {
  if (s == "accuracy" || s == "acc") return MetricId::accuracy;
  if (s == "f1") return MetricId::f1;
  if (s == "ppl" || s == "perplexity") return MetricId::perplexity;
  if (s == "bleu") return MetricId::bleu;
  throw ConfigError("unknown metric id: " + s);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw ConfigError("accuracy: empty input");
  if (predictions.size() != labels.size())
    throw ConfigError("accuracy: length mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double f1_score(long long tp, long long fp, long long fn_) {
  if (tp < 0 || fp < 0 || fn_ < 0) throw ConfigError("f1_score: negative count");
  if (tp + fp + fn_ == 0) throw ConfigError("f1_score: all-zero counts");
  return static_cast<double>(tp) /
         (static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn_));
}

double perplexity(std::span<const double> token_loglik) {
  if (token_loglik.empty()) throw ConfigError("perplexity: empty sequence");
  double sum = 0.0;
  for (double ll : token_loglik) {
    if (ll > 0.0)
      throw ConfigError("perplexity: positive loglikelihood " +
                        std::to_string(ll));
    sum += ll;
  }
  return std::exp(-sum / static_cast<double>(token_loglik.size()));
}

NgramProfile NgramProfile::build(std::span<const int> seq, int max_n) {
  if (max_n < 1) throw ConfigError("ngram profile: max_n must be >= 1");
  NgramProfile p;
  p.length = static_cast<int>(seq.size());
  p.max_n = max_n;
  p.counts.resize(static_cast<std::size_t>(max_n));
  std::string key;
  for (int n = 1; n <= max_n; ++n) {
    auto& table = p.counts[static_cast<std::size_t>(n - 1)];
    const int last = static_cast<int>(seq.size()) - n;
    for (int i = 0; i <= last; ++i) {
      key.assign(reinterpret_cast<const char*>(seq.data() + i),
                 static_cast<std::size_t>(n) * sizeof(int));
      ++table[key];
    }
  }
  return p;
}

double bleu(const NgramProfile& candidate, const NgramProfile& reference) {
  if (candidate.length == 0 || reference.length == 0)
    throw ConfigError("bleu: empty sequence");
  const int n_max = std::min({candidate.max_n, reference.max_n,
                              candidate.length, reference.length});
  constexpr double kEps = 1e-9;

  double log_sum = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const auto& cand = candidate.counts[static_cast<std::size_t>(n - 1)];
    const auto& ref = reference.counts[static_cast<std::size_t>(n - 1)];
    long long clipped = 0;
    long long total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    double pn = clipped > 0
                    ? static_cast<double>(clipped) / static_cast<double>(total)
                    : kEps / static_cast<double>(total);
    log_sum += std::log(pn) / static_cast<double>(n_max);
  }

  const double c = candidate.length;
  const double r = reference.length;
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

double bleu(std::span<const int> candidate, std::span<const int> reference,
            int max_n) {
  if (candidate.empty() || reference.empty())
    throw ConfigError("bleu: empty sequence");
  return bleu(NgramProfile::build(candidate, max_n),
              NgramProfile::build(reference, max_n));
}

}  // namespace alkit
