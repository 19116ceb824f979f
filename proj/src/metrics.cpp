#include "topoforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace topoforge {

std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::mse: return "mse";
    case MetricKind::mae: return "mae";
    case MetricKind::auc_roc: return "auc_roc";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view s) {
  for (auto k : {MetricKind::accuracy, MetricKind::mse, MetricKind::mae, MetricKind::auc_roc})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

bool higher_is_better(MetricKind k) { return k == MetricKind::accuracy || k == MetricKind::auc_roc; }
bool is_classification_metric(MetricKind k) { return higher_is_better(k); }

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

double binary_score(std::span<const double> row) {
  if (row.size() == 1) return row[0];
  if (row.size() == 2) return row[1] - row[0];
  throw std::invalid_argument("auc_roc: predictions need 1 or 2 columns, got " + std::to_string(row.size()));
}

double auc_roc(std::span<const double> scores, std::span<const std::int64_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_roc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      const auto y = labels[order[k]];
      if (y != 0 && y != 1) throw std::invalid_argument("auc_roc: labels must be binary");
      if (y == 1) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("auc_roc: targets contain a single class");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

MetricReport metric(MetricKind kind, const DenseMatrix& predictions, std::span<const std::int64_t> labels,
                    const DenseMatrix& targets) {
  const std::size_t n = predictions.rows();
  if (n == 0) throw std::invalid_argument("metric: no predictions");
  MetricReport report{std::string(to_string(kind)), 0.0, n};
  if (is_classification_metric(kind)) {
    if (labels.size() != n)
      throw std::invalid_argument("metric: " + std::to_string(n) + " predictions but " +
                                  std::to_string(labels.size()) + " labels");
    if (kind == MetricKind::accuracy) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (static_cast<std::int64_t>(argmax_row(predictions.row(i))) == labels[i]) ++correct;
      report.value = static_cast<double>(correct) / static_cast<double>(n);
    } else {
      std::vector<double> scores(n);
      for (std::size_t i = 0; i < n; ++i) scores[i] = binary_score(predictions.row(i));
      report.value = auc_roc(scores, labels);
    }
    return report;
  }
  if (targets.rows() != n || targets.cols() != predictions.cols())
    throw std::invalid_argument("metric: targets " + targets.shape_string() + " vs predictions " +
                                predictions.shape_string());
  double total = 0.0;
  const auto p = predictions.values();
  const auto t = targets.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    total += kind == MetricKind::mse ? d * d : std::abs(d);
  }
  report.value = total / static_cast<double>(p.size());
  return report;
}

}  // namespace topoforge
