#ifndef STYLEREC_LEARNER_HPP_
#define STYLEREC_LEARNER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "stylerec/data.hpp"
#include "stylerec/features.hpp"

namespace stylerec {

enum class LossKind { hinge, logistic };

const char* loss_name(LossKind loss);
LossKind loss_from_name(const std::string& name);

struct Hyperparams {
  double lambda1 = 0.0;  // L1 weight
  double lambda2 = 0.0;  // L2 weight
  LossKind loss = LossKind::hinge;
  double eta0 = 0.5;     // initial learning rate
  int epochs = 10;
  std::uint64_t seed = 0;
};

struct LossValue {
  double loss = 0.0;
  double scale = 0.0;  // d(loss)/d(w.x); subgradient w.r.t. w is scale * x
};

// Margin is y * w.x. Hinge treats the boundary margin of exactly 1 as
// satisfied; logistic uses an overflow-safe formulation.
LossValue loss_and_subgradient(LossKind loss, double margin, int label);

struct OptimizerState {
  std::vector<double> grad_sq_accum;  // per-coordinate accumulator G
  long step_count = 0;
  double epsilon = 1e-8;
};

// One adaptive subgradient step with composite L1 soft-thresholding:
//   G += g*g;  r_j = eta0 / sqrt(G_j + eps);  u_j = w_j - r_j g_j;
//   w_j = sign(u_j) max(0, |u_j| - r_j lambda1)
// The gradient g must already include the lambda2 * w term. Coordinates at
// index >= l1_exempt_from skip the shrinkage (used for the bias).
void adagrad_step(OptimizerState& state, std::vector<double>& weights,
                  const std::vector<double>& gradient, const Hyperparams& h,
                  std::size_t l1_exempt_from);

struct LinearModel {
  std::string class_name;
  std::string channel;
  std::vector<double> weights;
  double bias = 0.0;
  Hyperparams hyperparams;
  // Per-coordinate standardization fitted on the training sample.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;

  int dim() const { return static_cast<int>(weights.size()); }
};

// w.x + bias on the standardized input; no calibration.
double predict_score(const LinearModel& model, const std::vector<double>& x);

// Seeded-SGD training of one binary classifier. Weights start at zero; the
// example order is reshuffled each epoch; the bias is an appended constant
// coordinate exempt from both penalties. Requires both labels present.
LinearModel train_binary(const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, const Hyperparams& h,
                         const std::string& class_name = "",
                         const std::string& channel = "");

struct MultiModel {
  std::string channel;
  std::vector<LinearModel> models;  // one per manifest class, same order
  std::string trained_split;        // provenance for the fusion leakage guard

  const LinearModel& model_for(const std::string& cls) const;
  std::vector<std::string> class_names() const;
};

// One binary model per manifest class, trained on the train split with
// absent labels as negatives. Per-class RNG streams derive from h.seed, so
// classes may train in any order (or concurrently) with identical results.
MultiModel train_one_vs_all(const Manifest& manifest,
                            const FeatureChannel& channel,
                            const Hyperparams& h);

struct GridEntry {
  Hyperparams config;
  double mean_ap = 0.0;
  bool failed = false;
  std::string error;
};

struct SelectionResult {
  Hyperparams best;
  std::vector<GridEntry> table;
};

// Trains each grid config on the train split and scores balanced mean AP on
// the validation split. Ties prefer larger lambda1, then larger lambda2,
// then hinge over logistic, then grid order.
SelectionResult select_hyperparams(const std::vector<Hyperparams>& grid,
                                   const Manifest& manifest,
                                   const FeatureChannel& channel,
                                   std::uint64_t eval_seed);

std::vector<Hyperparams> default_grid(LossKind only_loss, bool both_losses,
                                      int epochs, std::uint64_t seed);

// Model files: single JSON object, versioned "SMDL1"; weights and the
// standardization vectors ride as base64 little-endian float64 payloads.
void save_model(const LinearModel& model, const std::string& path,
                const std::string& trained_split);
LinearModel load_model(const std::string& path, std::string* trained_split = nullptr);

}  // namespace stylerec

#endif  // STYLEREC_LEARNER_HPP_
