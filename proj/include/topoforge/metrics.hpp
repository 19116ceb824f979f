#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "topoforge/matrix.hpp"

namespace topoforge {

enum class MetricKind { accuracy, mse, mae, auc_roc };

std::string_view to_string(MetricKind k);
MetricKind parse_metric(std::string_view s);
bool higher_is_better(MetricKind k);
bool is_classification_metric(MetricKind k);

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::size_t n = 0;
};

/// Row argmax; ties go to the lowest column.
std::size_t argmax_row(std::span<const double> row);

/// Binary score of a prediction row: the single column, or logit1 - logit0.
double binary_score(std::span<const double> row);

/// Mann-Whitney AUC with mid-ranks for ties. Labels must be 0/1 with both present.
double auc_roc(std::span<const double> scores, std::span<const std::int64_t> labels);

/// Classification kinds read `labels`; regression kinds read `targets`
/// (same shape as predictions). Throws std::invalid_argument on bad input.
MetricReport metric(MetricKind kind, const DenseMatrix& predictions, std::span<const std::int64_t> labels,
                    const DenseMatrix& targets);

}  // namespace topoforge
