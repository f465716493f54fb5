#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revsent/csv.hpp"
#include "revsent/error.hpp"
#include "revsent/text.hpp"

namespace revsent {

/// Eq.-1 style accuracy from binary outcome counts.
inline double accuracy_from_counts(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  const auto total = tp + tn + fp + fn;
  if (total == 0) throw DataError("accuracy of zero examples");
  return static_cast<double>(tp + tn) / static_cast<double>(total);
}

/// Fraction of positions where prediction equals gold. For two classes this
/// is exactly (TP+TN)/(TP+TN+FP+FN).
inline double accuracy(std::span<const int> predictions, std::span<const int> golds) {
  if (predictions.size() != golds.size())
    throw DataError("accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " golds");
  if (predictions.empty()) throw DataError("accuracy of zero examples");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) correct += predictions[i] == golds[i];
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

struct BinaryCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Rows are gold classes, columns predicted classes.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(int n_classes = 3)
      : n_(n_classes), counts_(static_cast<std::size_t>(n_classes * n_classes), 0) {
    if (n_classes < 2) throw ConfigError("n_classes", "need at least 2 classes");
  }

  int n_classes() const noexcept { return n_; }

  void add(int gold, int predicted) {
    if (gold < 0 || gold >= n_ || predicted < 0 || predicted >= n_)
      throw DataError("label pair (" + std::to_string(gold) + "," + std::to_string(predicted) +
                      ") outside class range [0," + std::to_string(n_) + ")");
    ++counts_[index(gold, predicted)];
  }

  std::uint64_t at(int gold, int predicted) const { return counts_.at(index(gold, predicted)); }

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  std::uint64_t trace() const noexcept {
    std::uint64_t t = 0;
    for (int c = 0; c < n_; ++c) t += counts_[index(c, c)];
    return t;
  }

  /// One-vs-rest readout treating `cls` as the positive class.
  BinaryCounts one_vs_rest(int cls) const {
    BinaryCounts b;
    for (int g = 0; g < n_; ++g)
      for (int p = 0; p < n_; ++p) {
        const auto c = at(g, p);
        if (g == cls && p == cls) b.tp += c;
        else if (g == cls) b.fn += c;
        else if (p == cls) b.fp += c;
        else b.tn += c;
      }
    return b;
  }

private:
  std::size_t index(int g, int p) const noexcept { return static_cast<std::size_t>(g * n_ + p); }

  int n_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> golds, int n_classes = 3) {
  if (predictions.size() != golds.size()) throw DataError("confusion: length mismatch");
  ConfusionMatrix m(n_classes);
  for (std::size_t i = 0; i < golds.size(); ++i) m.add(golds[i], predictions[i]);
  return m;
}

// ---------------------------------------------------------------------------
// Number formatting

/// Fixed-point rendering with `digits` decimals, rounding half-to-even on the
/// shortest decimal form of the value (so 0.84935 -> "0.8494", 0.84925 -> "0.8492").
inline std::string format_fixed(double value, int digits = 4) {
  if (!std::isfinite(value)) return "nan";
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) return "nan";
  std::string s(buf, end);
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.erase(0, 1);
  }
  auto dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  const auto d = static_cast<std::size_t>(digits);
  if (frac.size() < d) frac.append(d - frac.size(), '0');

  std::string kept = int_part + frac.substr(0, d);
  const std::string rest = frac.substr(d);
  bool round_up = false;
  if (!rest.empty()) {
    if (rest[0] > '5') round_up = true;
    else if (rest[0] == '5') {
      const bool exact_half = rest.find_first_not_of('0', 1) == std::string::npos;
      round_up = !exact_half || ((kept.back() - '0') % 2 == 1);
    }
  }
  if (round_up) {
    std::size_t i = kept.size();
    for (;;) {
      if (i == 0) {
        kept.insert(kept.begin(), '1');
        break;
      }
      --i;
      if (kept[i] == '9') kept[i] = '0';
      else {
        ++kept[i];
        break;
      }
    }
  }
  const std::size_t int_len = kept.size() - d;
  std::string out = kept.substr(0, int_len);
  if (d > 0) out += "." + kept.substr(int_len);
  const bool zero = out.find_first_not_of("0.") == std::string::npos;
  return (negative && !zero) ? "-" + out : out;
}

/// Shortest round-trip form with a compact exponent: 1e-05 -> "1e-5".
inline std::string format_compact(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, end);
  auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mant = s.substr(0, e);
  std::string exp = s.substr(e + 1);
  std::string sign;
  if (!exp.empty() && (exp[0] == '-' || exp[0] == '+')) {
    if (exp[0] == '-') sign = "-";
    exp.erase(0, 1);
  }
  exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
  return mant + "e" + sign + exp;
}

/// "MMmin SSs", whole seconds rounded down.
inline std::string format_duration(double seconds) {
  const auto total = seconds > 0 ? static_cast<long long>(std::floor(seconds)) : 0LL;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02lldmin %02llds", total / 60, total % 60);
  return buf;
}

// ---------------------------------------------------------------------------
// Reports

/// One fine-tuning grid cell.
struct RunReport {
  std::string model;
  std::string labeling;  // "score" or "lexicon"
  int batch_size = 0;
  double learning_rate = 0.0;
  int epochs = 0;
  double avg_train_acc = 0.0;  // mean of per-epoch training accuracy
  double avg_val_acc = 0.0;    // mean of per-epoch validation accuracy
  double train_time_s = 0.0;
  double test_acc = 0.0;       // best-on-validation snapshot
  std::optional<std::string> error;  // set when the cell failed
};

enum class ReportFormat { csv, markdown };

inline const std::vector<std::string> kReportCsvHeader = {
    "model", "labeling", "batch_size", "learning_rate", "epochs",
    "avg_train_acc", "avg_val_acc", "train_time_s", "test_acc"};

inline std::string render_report(const std::vector<RunReport>& rows, ReportFormat format) {
  auto acc = [](const RunReport& r, double v) { return r.error ? std::string() : format_fixed(v, 4); };
  std::string out;
  if (format == ReportFormat::csv) {
    csv::append_row(out, kReportCsvHeader);
    for (const auto& r : rows)
      csv::append_row(out, {r.model, r.labeling, std::to_string(r.batch_size), format_compact(r.learning_rate),
                            std::to_string(r.epochs), acc(r, r.avg_train_acc), acc(r, r.avg_val_acc),
                            r.error ? "" : format_fixed(r.train_time_s, 3), acc(r, r.test_acc)});
    return out;
  }
  out += "| Model | Labeling | Batch Size | Learning Rate | Epochs | Avg Training Accuracy | "
         "Avg Validation Accuracy | Training Time | Training Time (s) | Test Accuracy |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + r.model + " | " + r.labeling + " | " + std::to_string(r.batch_size) + " | " +
           format_compact(r.learning_rate) + " | " + std::to_string(r.epochs) + " | ";
    if (r.error) {
      out += "failed: " + *r.error + " | | | | |\n";
      continue;
    }
    out += format_fixed(r.avg_train_acc, 4) + " | " + format_fixed(r.avg_val_acc, 4) + " | " +
           format_duration(r.train_time_s) + " | " + format_fixed(r.train_time_s, 3) + " | " +
           format_fixed(r.test_acc, 4) + " |\n";
  }
  return out;
}

/// Inverse of the CSV rendering; failed cells (empty metrics) come back with `error` set.
inline std::vector<RunReport> parse_report_csv(std::string_view data) {
  auto records = csv::parse(data);
  if (records.empty()) throw DataError("report: empty file");
  if (records[0].fields != kReportCsvHeader) throw DataError("report: unexpected header");
  std::vector<RunReport> rows;
  auto num = [](const std::string& s, std::size_t line) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw DataError("report: bad number '" + s + "'", line);
    }
  };
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    if (f.size() != kReportCsvHeader.size()) throw DataError("report: wrong field count", i);
    RunReport r;
    r.model = f[0];
    r.labeling = f[1];
    r.batch_size = static_cast<int>(num(f[2], i));
    r.learning_rate = num(f[3], i);
    r.epochs = static_cast<int>(num(f[4], i));
    if (f[5].empty()) {
      r.error = "failed";
    } else {
      r.avg_train_acc = num(f[5], i);
      r.avg_val_acc = num(f[6], i);
      r.train_time_s = num(f[7], i);
      r.test_acc = num(f[8], i);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// One classical baseline's row: training accuracy, k-fold CV mean and held-out test accuracy.
struct BaselineReport {
  std::string model;
  std::string labeling;
  double train_acc = 0.0;
  double cv_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> fold_accs;
};

inline std::string render_baseline_report(const std::vector<BaselineReport>& rows, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::csv) {
    csv::append_row(out, {"model", "labeling", "train_acc", "cv_acc", "test_acc", "fold_accs"});
    for (const auto& r : rows) {
      std::vector<std::string> folds;
      for (double a : r.fold_accs) folds.push_back(format_fixed(a, 4));
      csv::append_row(out, {r.model, r.labeling, format_fixed(r.train_acc, 4), format_fixed(r.cv_acc, 4),
                            format_fixed(r.test_acc, 4), text::join(folds, ";")});
    }
    return out;
  }
  out += "| Model | Labeling | Training Accuracy | Cross Validation Accuracy | Test Accuracy |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : rows)
    out += "| " + r.model + " | " + r.labeling + " | " + format_fixed(r.train_acc, 4) + " | " +
           format_fixed(r.cv_acc, 4) + " | " + format_fixed(r.test_acc, 4) + " |\n";
  return out;
}

}  // namespace revsent
