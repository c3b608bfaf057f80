#include "stylerec/eval.hpp"

#include <algorithm>
#include <cmath>

#include "stylerec/error.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

double average_precision(std::vector<ScoredItem> items) {
  std::size_t n_pos = 0;
  for (const ScoredItem& it : items) {
    if (!std::isfinite(it.score)) throw_data("average_precision: non-finite score");
    if (it.label > 0) ++n_pos;
  }
  if (n_pos == 0) throw_data("average_precision: no positive items");

  std::sort(items.begin(), items.end(),
            [](const ScoredItem& a, const ScoredItem& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  double sum = 0.0;
  std::size_t seen_pos = 0;
  for (std::size_t rank = 0; rank < items.size(); ++rank) {
    if (items[rank].label > 0) {
      ++seen_pos;
      sum += static_cast<double>(seen_pos) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(n_pos);
}

std::vector<const ImageRecord*> class_balanced_pool(const Manifest& manifest,
                                                    Split split,
                                                    std::uint64_t seed,
                                                    std::size_t per_class) {
  std::vector<std::vector<const ImageRecord*>> strata(manifest.classes.size());
  for (const ImageRecord& r : manifest.records) {
    if (r.split != split || r.labels.empty()) continue;
    for (std::size_t c = 0; c < manifest.classes.size(); ++c) {
      if (r.has_label(manifest.classes[c])) {
        strata[c].push_back(&r);
        break;
      }
    }
  }
  std::size_t min_count = SIZE_MAX;
  for (std::size_t c = 0; c < strata.size(); ++c) {
    if (strata[c].empty()) {
      throw_data("class \"" + manifest.classes[c] +
                 "\" has no records in the evaluated split");
    }
    min_count = std::min(min_count, strata[c].size());
  }
  std::size_t draw = per_class == 0 ? min_count : per_class;
  if (draw > min_count) {
    throw_data("requested " + std::to_string(draw) +
               " records per class but the smallest stratum has " +
               std::to_string(min_count));
  }

  std::vector<const ImageRecord*> pool;
  pool.reserve(draw * strata.size());
  for (std::size_t c = 0; c < strata.size(); ++c) {
    std::vector<const ImageRecord*>& s = strata[c];
    std::sort(s.begin(), s.end(),
              [](const ImageRecord* a, const ImageRecord* b) {
                return a->id < b->id;
              });
    Rng rng(seed, "pool|" + manifest.classes[c]);
    rng.shuffle(s);
    pool.insert(pool.end(), s.begin(), s.begin() + draw);
  }
  return pool;
}

ApByClass balanced_mean_ap(const Manifest& manifest, Split split,
                           const ScoreFn& score,
                           const BalancedApOptions& opts) {
  ApByClass out;
  double total = 0.0;
  for (const std::string& cls : manifest.classes) {
    std::vector<const ImageRecord*> pool = class_balanced_pool(
        manifest, split, mix_seed(opts.seed, "ap|" + cls), opts.per_class);
    out.pool_size = pool.size();
    out.per_class = pool.size() / manifest.classes.size();
    std::vector<ScoredItem> items;
    items.reserve(pool.size());
    for (const ImageRecord* r : pool) {
      items.push_back({score(cls, r->id), r->has_label(cls) ? +1 : -1, r->id});
    }
    double ap = average_precision(std::move(items));
    out.per_class_ap[cls] = ap;
    total += ap;
  }
  out.mean_ap = total / static_cast<double>(manifest.classes.size());
  return out;
}

double accuracy_at_threshold(const std::vector<ScoredItem>& items,
                             double threshold) {
  if (items.empty()) throw_data("accuracy over an empty item set");
  std::size_t correct = 0;
  for (const ScoredItem& it : items) {
    int predicted = it.score > threshold ? +1 : -1;
    if (predicted == it.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

double tune_threshold(const std::vector<ScoredItem>& items) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const ScoredItem& it : items) (it.label > 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) {
    throw_data("tune_threshold needs both labels present");
  }

  std::vector<double> scores;
  scores.reserve(items.size());
  for (const ScoredItem& it : items) scores.push_back(it.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  std::vector<double> candidates;
  candidates.push_back(scores.front() - 1.0);
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) {
    candidates.push_back(0.5 * (scores[i] + scores[i + 1]));
  }
  candidates.push_back(scores.back() + 1.0);

  double best_threshold = candidates.front();
  double best_balanced = -1.0;
  for (double t : candidates) {
    std::size_t tp = 0, tn = 0;
    for (const ScoredItem& it : items) {
      if (it.label > 0 && it.score > t) ++tp;
      if (it.label < 0 && it.score <= t) ++tn;
    }
    double balanced = 0.5 * (static_cast<double>(tp) / n_pos +
                             static_cast<double>(tn) / n_neg);
    if (balanced > best_balanced) {
      best_balanced = balanced;
      best_threshold = t;
    }
  }
  return best_threshold;
}

ConfusionMatrix confusion_matrix(const Manifest& manifest, Split split,
                                 const ScoreFn& score) {
  const std::size_t k = manifest.classes.size();
  std::vector<const ImageRecord*> records = manifest.records_in(split);
  if (records.empty()) throw_data("confusion_matrix: split is empty");

  std::vector<double> counts(k * k, 0.0);
  std::vector<double> label_counts(k, 0.0);
  double total_labels = 0.0;
  for (const ImageRecord* r : records) {
    if (r->labels.empty()) {
      throw_data("record \"" + r->id + "\" has no label; cannot enter the confusion matrix");
    }
    std::size_t predicted = 0;
    double best = -HUGE_VAL;
    for (std::size_t c = 0; c < k; ++c) {
      double s = score(manifest.classes[c], r->id);
      if (s > best) {
        best = s;
        predicted = c;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (r->has_label(manifest.classes[c])) {
        counts[c * k + predicted] += 1.0;
        label_counts[c] += 1.0;
        total_labels += 1.0;
      }
    }
  }

  ConfusionMatrix out;
  out.classes = manifest.classes;
  out.rows.resize(k * k);
  out.prior.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (label_counts[c] == 0.0) {
      throw_data("class \"" + manifest.classes[c] +
                 "\" never appears as a true label in the split");
    }
    for (std::size_t p = 0; p < k; ++p) {
      out.rows[c * k + p] = counts[c * k + p] / label_counts[c];
    }
    out.prior[c] = label_counts[c] / total_labels;
  }
  return out;
}

PearsonResult pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw_data("pearson: series must align and be non-empty");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  PearsonResult out;
  if (saa <= 0.0 || sbb <= 0.0) {
    out.zero_variance = true;
    return out;
  }
  out.r = sab / std::sqrt(saa * sbb);
  return out;
}

CorrelationMatrix content_style_correlation(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>&
        content_series,
    const Manifest& manifest, Split split) {
  std::vector<const ImageRecord*> records = manifest.records_in(split);
  if (records.empty()) throw_data("correlation: split is empty");

  CorrelationMatrix out;
  out.col_names = manifest.classes;
  for (const auto& [name, series] : content_series) {
    out.row_names.push_back(name);
    std::vector<double> content_values;
    content_values.reserve(records.size());
    for (const ImageRecord* r : records) {
      auto it = series.find(r->id);
      if (it == series.end()) {
        throw_data("content series \"" + name + "\" does not cover id \"" +
                   r->id + "\"");
      }
      content_values.push_back(it->second);
    }
    for (const std::string& cls : manifest.classes) {
      std::vector<double> label_values;
      label_values.reserve(records.size());
      for (const ImageRecord* r : records) {
        label_values.push_back(r->has_label(cls) ? 1.0 : 0.0);
      }
      PearsonResult pr = pearson(content_values, label_values);
      out.values.push_back(pr.r);
      out.zero_variance.push_back(pr.zero_variance);
    }
  }
  return out;
}

void validate_report(const EvalReport& report) {
  if (report.classes.empty()) throw_data("report has no classes");
  const std::size_t k = report.classes.size();
  for (const std::string& cls : report.classes) {
    auto ap = report.per_class_ap.find(cls);
    if (ap == report.per_class_ap.end() || ap->second < 0.0 ||
        ap->second > 1.0) {
      throw_data("report AP missing or out of range for class " + cls);
    }
    auto acc = report.per_class_accuracy.find(cls);
    if (acc == report.per_class_accuracy.end() || acc->second < 0.0 ||
        acc->second > 1.0) {
      throw_data("report accuracy missing or out of range for class " + cls);
    }
  }
  if (report.confusion.classes != report.classes ||
      report.confusion.rows.size() != k * k ||
      report.confusion.prior.size() != k) {
    throw_data("report confusion matrix malformed");
  }
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      double v = report.confusion.rows[c * k + p];
      if (v < 0.0) throw_data("negative confusion entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw_data("confusion row does not sum to 1");
    }
  }
}

EvalReport build_report(const Manifest& manifest, const ScoreFn& score,
                        const ReportOptions& opts) {
  EvalReport report;
  report.classes = manifest.classes;
  report.seed = opts.seed;

  ApByClass ap = balanced_mean_ap(manifest, opts.eval_split, score,
                                  {opts.seed, opts.ap_per_class});
  report.per_class_ap = ap.per_class_ap;
  report.mean_ap = ap.mean_ap;
  report.ap_per_class = ap.per_class;

  double acc_total = 0.0;
  for (const std::string& cls : manifest.classes) {
    // Threshold tuned on the held-out split, frozen before touching test.
    std::vector<LabeledId> val_pairs =
        binarize_labels(manifest, cls, opts.threshold_split);
    std::vector<ScoredItem> val_items;
    val_items.reserve(val_pairs.size());
    for (const LabeledId& p : val_pairs) {
      val_items.push_back({score(cls, p.id), p.label, p.id});
    }
    double threshold = tune_threshold(val_items);
    report.thresholds[cls] = threshold;

    std::vector<LabeledId> test_pairs =
        binarize_labels(manifest, cls, opts.eval_split);
    std::vector<LabeledId> subset =
        balanced_subset(test_pairs, mix_seed(opts.seed, "acc|" + cls));
    std::vector<ScoredItem> test_items;
    test_items.reserve(subset.size());
    for (const LabeledId& p : subset) {
      test_items.push_back({score(cls, p.id), p.label, p.id});
    }
    double acc = accuracy_at_threshold(test_items, threshold);
    report.per_class_accuracy[cls] = acc;
    report.accuracy_subset_size[cls] = subset.size();
    acc_total += acc;
  }
  report.mean_accuracy = acc_total / static_cast<double>(manifest.classes.size());

  report.confusion = confusion_matrix(manifest, opts.eval_split, score);
  validate_report(report);
  return report;
}

}  // namespace stylerec
