#pragma once

#include <string>
#include <vector>

#include "tgnn/errors.hpp"

namespace tgnn {

// All values are percentages. Positive class = rumour (class 1).
struct MetricsRow {
  std::string name;
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> folds;
  MetricsRow average;  // unweighted mean of the fold rows
};

// Confusion-matrix metrics from per-item predictions and ground truth, both
// in {0,1}. F1 uses the 0/0 -> 0 convention.
MetricsRow compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual);

MetricsRow average_rows(const std::vector<MetricsRow>& rows);

// Fixed-width table with two-decimal rendering, one row per fold plus the
// average row.
std::string render_metrics_table(const MetricsReport& report);

void save_metrics(const MetricsReport& report, const std::string& path);
MetricsReport load_metrics(const std::string& path);

}  // namespace tgnn
