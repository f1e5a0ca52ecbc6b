#include "tgnn/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace tgnn {

using nlohmann::json;

MetricsRow compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) {
    throw DomainError("compute_metrics: prediction and label counts differ");
  }
  if (predicted.empty()) throw DomainError("compute_metrics: empty test set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != 0 && predicted[i] != 1) throw DomainError("prediction outside {0,1}");
    if (actual[i] != 0 && actual[i] != 1) throw DomainError("label outside {0,1}");
    if (predicted[i] == 1 && actual[i] == 1) ++tp;
    if (predicted[i] == 1 && actual[i] == 0) ++fp;
    if (predicted[i] == 0 && actual[i] == 1) ++fn;
    if (predicted[i] == 0 && actual[i] == 0) ++tn;
  }
  auto f1 = [](std::size_t tp_, std::size_t fp_, std::size_t fn_) {
    double denom = static_cast<double>(2 * tp_ + fp_ + fn_);
    return denom == 0.0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(tp_) / denom;
  };
  MetricsRow row;
  row.f1_positive = f1(tp, fp, fn);
  row.f1_negative = f1(tn, fn, fp);  // negative class: swap roles
  row.accuracy = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(predicted.size());
  row.macro_f1 = 0.5 * (row.f1_positive + row.f1_negative);
  return row;
}

MetricsRow average_rows(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw DomainError("average_rows: no rows");
  MetricsRow avg;
  avg.name = "average";
  for (const MetricsRow& r : rows) {
    avg.f1_positive += r.f1_positive;
    avg.f1_negative += r.f1_negative;
    avg.accuracy += r.accuracy;
    avg.macro_f1 += r.macro_f1;
  }
  double n = static_cast<double>(rows.size());
  avg.f1_positive /= n;
  avg.f1_negative /= n;
  avg.accuracy /= n;
  avg.macro_f1 /= n;
  return avg;
}

std::string render_metrics_table(const MetricsReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %12s %12s %10s %10s\n", "Fold", "Positive F1",
                "Negative F1", "Accuracy", "Macro F1");
  out += line;
  auto add_row = [&](const MetricsRow& r) {
    std::snprintf(line, sizeof(line), "%-24s %12.2f %12.2f %10.2f %10.2f\n", r.name.c_str(),
                  r.f1_positive, r.f1_negative, r.accuracy, r.macro_f1);
    out += line;
  };
  for (const MetricsRow& r : report.folds) add_row(r);
  add_row(report.average);
  return out;
}

namespace {

json row_to_json(const MetricsRow& r) {
  json j;
  j["fold"] = r.name;
  j["f1_positive"] = r.f1_positive;
  j["f1_negative"] = r.f1_negative;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  return j;
}

MetricsRow row_from_json(const json& j) {
  MetricsRow r;
  r.name = j.at("fold").get<std::string>();
  r.f1_positive = j.at("f1_positive").get<double>();
  r.f1_negative = j.at("f1_negative").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  return r;
}

}  // namespace

void save_metrics(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open metrics file for writing: " + path);
  json header;
  header["format"] = "tgnn-metrics";
  header["version"] = 1;
  out << header.dump() << "\n";
  for (const MetricsRow& r : report.folds) out << row_to_json(r).dump() << "\n";
  json avg = row_to_json(report.average);
  avg["average"] = true;
  out << avg.dump() << "\n";
  if (!out) throw DataError("failed writing metrics: " + path);
}

MetricsReport load_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty metrics file: " + path);
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "tgnn-metrics") {
    throw DataError("not a tgnn-metrics file: " + path);
  }
  MetricsReport report;
  bool have_average = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed metrics record in " + path);
    MetricsRow row = row_from_json(j);
    if (j.value("average", false)) {
      report.average = row;
      have_average = true;
    } else {
      report.folds.push_back(row);
    }
  }
  if (!have_average) throw DataError("metrics file has no average row: " + path);
  return report;
}

}  // namespace tgnn
