#include "stylerec/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "stylerec/error.hpp"
#include "stylerec/eval.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

using nlohmann::json;

const char* loss_name(LossKind loss) {
  return loss == LossKind::hinge ? "hinge" : "logistic";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "hinge") return LossKind::hinge;
  if (name == "logistic") return LossKind::logistic;
  throw_usage("unknown loss: " + name + " (expected hinge or logistic)");
}

LossValue loss_and_subgradient(LossKind loss, double margin, int label) {
  LossValue out;
  const double y = label > 0 ? 1.0 : -1.0;
  if (loss == LossKind::hinge) {
    if (margin < 1.0) {
      out.loss = 1.0 - margin;
      out.scale = -y;
    }
    return out;
  }
  // log(1 + exp(-m)), stable on both tails.
  if (margin >= 0.0) {
    out.loss = std::log1p(std::exp(-margin));
    out.scale = -y * std::exp(-margin) / (1.0 + std::exp(-margin));
  } else {
    out.loss = -margin + std::log1p(std::exp(margin));
    out.scale = -y / (1.0 + std::exp(margin));
  }
  return out;
}

void adagrad_step(OptimizerState& state, std::vector<double>& weights,
                  const std::vector<double>& gradient, const Hyperparams& h,
                  std::size_t l1_exempt_from) {
  if (weights.size() != gradient.size() ||
      state.grad_sq_accum.size() != weights.size()) {
    throw_internal("adagrad_step: dimension mismatch");
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    double g = gradient[j];
    if (!std::isfinite(g)) {
      throw_internal("non-finite gradient at coordinate " + std::to_string(j) +
                     ", step " + std::to_string(state.step_count + 1));
    }
    state.grad_sq_accum[j] += g * g;
    double rate = h.eta0 / std::sqrt(state.grad_sq_accum[j] + state.epsilon);
    double u = weights[j] - rate * g;
    if (j < l1_exempt_from && h.lambda1 > 0.0) {
      double shrunk = std::fabs(u) - rate * h.lambda1;
      weights[j] = shrunk > 0.0 ? std::copysign(shrunk, u) : 0.0;
    } else {
      weights[j] = u;
    }
  }
  ++state.step_count;
}

double predict_score(const LinearModel& model, const std::vector<double>& x) {
  if (x.size() != model.weights.size()) {
    throw_data("predict_score: input dim " + std::to_string(x.size()) +
               " does not match model dim " +
               std::to_string(model.weights.size()));
  }
  double t = model.bias;
  if (model.feature_mean.empty()) {
    for (std::size_t j = 0; j < x.size(); ++j) t += model.weights[j] * x[j];
  } else {
    for (std::size_t j = 0; j < x.size(); ++j) {
      t += model.weights[j] * (x[j] - model.feature_mean[j]) /
           model.feature_scale[j];
    }
  }
  return t;
}

LinearModel train_binary(const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, const Hyperparams& h,
                         const std::string& class_name,
                         const std::string& channel) {
  if (h.lambda1 < 0.0 || h.lambda2 < 0.0 || h.eta0 <= 0.0 || h.epochs < 1) {
    throw_usage("invalid hyperparameters: lambda1/lambda2 must be >= 0, "
                "eta0 > 0, epochs >= 1");
  }
  if (xs.empty() || xs.size() != ys.size()) {
    throw_data("train_binary: examples and labels must align and be non-empty");
  }
  const std::size_t d = xs[0].size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != d) {
      throw_data("train_binary: inconsistent feature dimensions");
    }
    (ys[i] > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw_data("train_binary: both classes must be present" +
               (class_name.empty() ? "" : " (class " + class_name + ")"));
  }

  // Standardize per coordinate on the training sample.
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= double(xs.size());
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < d; ++j) {
      double c = x[j] - mean[j];
      scale[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    scale[j] = std::sqrt(scale[j] / double(xs.size()));
    if (scale[j] < 1e-12) scale[j] = 1.0;
  }

  std::vector<double> w(d + 1, 0.0);  // bias rides as the last coordinate
  OptimizerState state;
  state.grad_sq_accum.assign(d + 1, 0.0);
  std::vector<double> z(d + 1, 1.0), g(d + 1, 0.0);
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);

  Rng rng(h.seed, "train_binary|" + class_name);
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const std::vector<double>& x = xs[idx];
      const double y = ys[idx] > 0 ? 1.0 : -1.0;
      double t = w[d];
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = (x[j] - mean[j]) / scale[j];
        t += w[j] * z[j];
      }
      if (!std::isfinite(t)) {
        throw_internal("training diverged (non-finite score) at step " +
                       std::to_string(state.step_count + 1));
      }
      LossValue lv = loss_and_subgradient(h.loss, y * t, ys[idx]);
      for (std::size_t j = 0; j < d; ++j) {
        g[j] = lv.scale * z[j] + h.lambda2 * w[j];
      }
      g[d] = lv.scale;  // bias: no penalty terms
      adagrad_step(state, w, g, h, d);
    }
  }

  LinearModel model;
  model.class_name = class_name;
  model.channel = channel;
  model.weights.assign(w.begin(), w.begin() + d);
  model.bias = w[d];
  model.hyperparams = h;
  model.feature_mean = std::move(mean);
  model.feature_scale = std::move(scale);
  return model;
}

const LinearModel& MultiModel::model_for(const std::string& cls) const {
  for (const LinearModel& m : models) {
    if (m.class_name == cls) return m;
  }
  throw_data("no model for class: " + cls);
}

std::vector<std::string> MultiModel::class_names() const {
  std::vector<std::string> out;
  out.reserve(models.size());
  for (const LinearModel& m : models) out.push_back(m.class_name);
  return out;
}

MultiModel train_one_vs_all(const Manifest& manifest,
                            const FeatureChannel& channel,
                            const Hyperparams& h) {
  MultiModel multi;
  multi.channel = channel.name;
  multi.trained_split = "train";
  for (const std::string& cls : manifest.classes) {
    std::vector<LabeledId> pairs = binarize_labels(manifest, cls, Split::train);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(pairs.size());
    ys.reserve(pairs.size());
    for (const LabeledId& p : pairs) {
      xs.push_back(channel.vector_for(p.id));
      ys.push_back(p.label);
    }
    Hyperparams per_class = h;
    per_class.seed = mix_seed(h.seed, "ova|" + cls);
    try {
      multi.models.push_back(
          train_binary(xs, ys, per_class, cls, channel.name));
    } catch (const Error& e) {
      throw Error(e.kind(),
                  "training class \"" + cls + "\" failed: " + e.what());
    }
  }
  return multi;
}

SelectionResult select_hyperparams(const std::vector<Hyperparams>& grid,
                                   const Manifest& manifest,
                                   const FeatureChannel& channel,
                                   std::uint64_t eval_seed) {
  if (grid.empty()) throw_usage("hyperparameter grid is empty");
  if (manifest.records_in(Split::val).empty()) {
    throw_data("validation split is empty");
  }

  SelectionResult result;
  bool have_best = false;
  std::size_t best_idx = 0;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridEntry entry;
    entry.config = grid[i];
    try {
      MultiModel models = train_one_vs_all(manifest, channel, grid[i]);
      ScoreFn score = [&](const std::string& cls, const std::string& id) {
        return predict_score(models.model_for(cls), channel.vector_for(id));
      };
      ApByClass ap = balanced_mean_ap(manifest, Split::val, score,
                                      {eval_seed, 0});
      entry.mean_ap = ap.mean_ap;
    } catch (const Error& e) {
      entry.failed = true;
      entry.error = e.what();
    }
    result.table.push_back(entry);
    if (entry.failed) continue;

    bool take = false;
    if (!have_best) {
      take = true;
    } else {
      const GridEntry& best = result.table[best_idx];
      if (entry.mean_ap > best.mean_ap) {
        take = true;
      } else if (entry.mean_ap == best.mean_ap) {
        const Hyperparams& a = entry.config;
        const Hyperparams& b = best.config;
        if (a.lambda1 != b.lambda1) {
          take = a.lambda1 > b.lambda1;
        } else if (a.lambda2 != b.lambda2) {
          take = a.lambda2 > b.lambda2;
        } else if (a.loss != b.loss) {
          take = a.loss == LossKind::hinge;
        }
        // Equal on all keys: keep the earlier grid entry.
      }
    }
    if (take) {
      have_best = true;
      best_idx = i;
    }
  }
  if (!have_best) {
    std::string detail;
    for (const GridEntry& e : result.table) {
      if (e.failed) detail += "\n  " + e.error;
    }
    throw_data("every hyperparameter config failed:" + detail);
  }
  result.best = result.table[best_idx].config;
  return result;
}

std::vector<Hyperparams> default_grid(LossKind only_loss, bool both_losses,
                                      int epochs, std::uint64_t seed) {
  const double lambdas[] = {0.0, 1e-7, 1e-5, 1e-3};
  std::vector<LossKind> losses;
  if (both_losses) {
    losses = {LossKind::hinge, LossKind::logistic};
  } else {
    losses = {only_loss};
  }
  std::vector<Hyperparams> grid;
  for (LossKind loss : losses) {
    for (double l1 : lambdas) {
      for (double l2 : lambdas) {
        Hyperparams h;
        h.lambda1 = l1;
        h.lambda2 = l2;
        h.loss = loss;
        h.epochs = epochs;
        h.seed = seed;
        grid.push_back(h);
      }
    }
  }
  return grid;
}

namespace {

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (std::size_t i = 0; i < size; i += 3) {
    std::uint32_t chunk = std::uint32_t(data[i]) << 16;
    int have = 1;
    if (i + 1 < size) {
      chunk |= std::uint32_t(data[i + 1]) << 8;
      have = 2;
    }
    if (i + 2 < size) {
      chunk |= std::uint32_t(data[i + 2]);
      have = 3;
    }
    out.push_back(kB64Alphabet[(chunk >> 18) & 63]);
    out.push_back(kB64Alphabet[(chunk >> 12) & 63]);
    out.push_back(have >= 2 ? kB64Alphabet[(chunk >> 6) & 63] : '=');
    out.push_back(have >= 3 ? kB64Alphabet[chunk & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (int i = 0; i < 64; ++i) lookup[int(kB64Alphabet[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t chunk = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    int v = lookup[static_cast<unsigned char>(c)];
    if (v < 0) throw_data("invalid base64 payload");
    chunk = (chunk << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(std::uint8_t((chunk >> bits) & 0xff));
    }
  }
  return out;
}

std::string doubles_to_b64(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &values[i], 8);
    for (int k = 0; k < 8; ++k) {
      bytes[8 * i + k] = std::uint8_t((bits >> (8 * k)) & 0xff);
    }
  }
  return base64_encode(bytes.data(), bytes.size());
}

std::vector<double> b64_to_doubles(const std::string& text) {
  std::vector<std::uint8_t> bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw_data("float payload length not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      bits |= std::uint64_t(bytes[8 * i + k]) << (8 * k);
    }
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

}  // namespace

void save_model(const LinearModel& model, const std::string& path,
                const std::string& trained_split) {
  json j;
  j["magic"] = "SMDL1";
  j["class"] = model.class_name;
  j["channel"] = model.channel;
  j["dim"] = model.dim();
  j["bias"] = model.bias;
  j["hyperparams"] = {{"lambda1", model.hyperparams.lambda1},
                      {"lambda2", model.hyperparams.lambda2},
                      {"loss", loss_name(model.hyperparams.loss)},
                      {"eta0", model.hyperparams.eta0},
                      {"epochs", model.hyperparams.epochs},
                      {"seed", model.hyperparams.seed}};
  j["mean_b64"] = doubles_to_b64(model.feature_mean);
  j["scale_b64"] = doubles_to_b64(model.feature_scale);
  j["weights_b64"] = doubles_to_b64(model.weights);
  j["trained_split"] = trained_split;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write model file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw_data("write failed: " + path);
}

LinearModel load_model(const std::string& path, std::string* trained_split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open model file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("magic", "") != std::string("SMDL1")) {
    throw_data("not a SMDL1 model file: " + path);
  }
  LinearModel model;
  model.class_name = j.at("class").get<std::string>();
  model.channel = j.at("channel").get<std::string>();
  model.bias = j.at("bias").get<double>();
  const json& h = j.at("hyperparams");
  model.hyperparams.lambda1 = h.at("lambda1").get<double>();
  model.hyperparams.lambda2 = h.at("lambda2").get<double>();
  model.hyperparams.loss = loss_from_name(h.at("loss").get<std::string>());
  model.hyperparams.eta0 = h.at("eta0").get<double>();
  model.hyperparams.epochs = h.at("epochs").get<int>();
  model.hyperparams.seed = h.at("seed").get<std::uint64_t>();
  model.feature_mean = b64_to_doubles(j.at("mean_b64").get<std::string>());
  model.feature_scale = b64_to_doubles(j.at("scale_b64").get<std::string>());
  model.weights = b64_to_doubles(j.at("weights_b64").get<std::string>());
  if (model.dim() != j.at("dim").get<int>()) {
    throw_data("model dim disagrees with payload in " + path);
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw_data("non-finite weight in " + path);
  }
  if (trained_split) *trained_split = j.value("trained_split", "");
  return model;
}

}  // namespace stylerec
