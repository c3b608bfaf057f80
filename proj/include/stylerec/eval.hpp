#ifndef STYLEREC_EVAL_HPP_
#define STYLEREC_EVAL_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylerec/data.hpp"

namespace stylerec {

struct ScoredItem {
  double score = 0.0;
  int label = 0;  // +1 or -1
  std::string id;
};

// Non-interpolated average precision: items ranked by descending score with
// ties broken by ascending id, AP = mean over positives of the precision at
// that positive's rank. Requires at least one positive.
double average_precision(std::vector<ScoredItem> items);

// Scores one (class, id) pair; adapters wrap single models, OvA stacks, or
// fusion stacks behind this signature.
using ScoreFn =
    std::function<double(const std::string& cls, const std::string& id)>;

// Equal-class-prevalence pool: labeled records of the split are stratified
// by their first label in class order and per_class records are drawn from
// every stratum (per_class = 0 takes the minimum stratum size). Each class's
// binary AP task on such a pool has prevalence ~ 1/K.
std::vector<const ImageRecord*> class_balanced_pool(const Manifest& manifest,
                                                    Split split,
                                                    std::uint64_t seed,
                                                    std::size_t per_class);

struct ApByClass {
  std::map<std::string, double> per_class_ap;
  double mean_ap = 0.0;
  std::size_t per_class = 0;   // stratum draw actually used
  std::size_t pool_size = 0;   // records per pool
};

struct BalancedApOptions {
  std::uint64_t seed = 0;
  std::size_t per_class = 0;  // 0 = minimum stratum size
};

// The AP protocol: every class gets its own seeded class-balanced pool; AP
// is computed against binary membership labels on that pool and averaged
// over classes.
ApByClass balanced_mean_ap(const Manifest& manifest, Split split,
                           const ScoreFn& score, const BalancedApOptions& opts);

// Accuracy of (score > threshold) on the given items.
double accuracy_at_threshold(const std::vector<ScoredItem>& items,
                             double threshold);

// Threshold maximizing balanced accuracy (mean of the per-label recalls).
// Candidates are midpoints between adjacent distinct scores plus sentinels
// beyond both extremes; the lowest maximizing candidate wins.
double tune_threshold(const std::vector<ScoredItem>& items);

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<double> rows;   // K x K row-stochastic, true class x predicted
  std::vector<double> prior;  // empirical ground-truth label distribution

  double at(int true_class, int predicted) const {
    return rows[std::size_t(true_class) * classes.size() + predicted];
  }
};

// Argmax-of-scores confusion over the split; multi-label records contribute
// one row per ground-truth label; score ties resolve to the lowest class
// index. Every class must appear as a true label at least once.
ConfusionMatrix confusion_matrix(const Manifest& manifest, Split split,
                                 const ScoreFn& score);

struct PearsonResult {
  double r = 0.0;
  bool zero_variance = false;
};

PearsonResult pearson(const std::vector<double>& a,
                      const std::vector<double>& b);

struct CorrelationMatrix {
  std::vector<std::string> row_names;  // content series
  std::vector<std::string> col_names;  // style classes
  std::vector<double> values;          // rows x cols
  std::vector<bool> zero_variance;     // per cell

  double at(int row, int col) const {
    return values[std::size_t(row) * col_names.size() + col];
  }
};

// Pearson correlation of each named content series against each class's
// binary label series over the split's records. All evaluated ids must be
// covered by every series; zero-variance pairs record r = 0 with a flag.
CorrelationMatrix content_style_correlation(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>&
        content_series,
    const Manifest& manifest, Split split);

struct EvalReport {
  std::vector<std::string> classes;
  std::map<std::string, double> per_class_ap;
  double mean_ap = 0.0;
  std::map<std::string, double> per_class_accuracy;
  double mean_accuracy = 0.0;
  std::map<std::string, double> thresholds;
  ConfusionMatrix confusion;
  std::optional<CorrelationMatrix> correlation;
  std::uint64_t seed = 0;
  std::size_t ap_per_class = 0;
  std::map<std::string, std::size_t> accuracy_subset_size;
};

// Throws unless the report is structurally sound (non-empty classes,
// row-stochastic confusion, metrics in range).
void validate_report(const EvalReport& report);

struct ReportOptions {
  std::uint64_t seed = 0;
  std::size_t ap_per_class = 0;
  Split eval_split = Split::test;
  Split threshold_split = Split::val;
};

// Assembles the full evaluation: balanced AP per class, accuracy on
// label-balanced subsets at thresholds tuned on the threshold split, and
// the confusion matrix.
EvalReport build_report(const Manifest& manifest, const ScoreFn& score,
                        const ReportOptions& opts);

enum class ReportFormat { json, csv, html };

ReportFormat report_format_from_name(const std::string& name);

// Deterministic serialization; JSON is versioned ("EVAL1") and round-trips
// through parse_report.
std::string render_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report(const std::string& json_text);

}  // namespace stylerec

#endif  // STYLEREC_EVAL_HPP_
