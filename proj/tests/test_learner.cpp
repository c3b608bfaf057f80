#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "stylerec/error.hpp"
#include "stylerec/learner.hpp"
#include "stylerec/rng.hpp"
#include "support/synth.hpp"

using namespace stylerec;
namespace ts = stylerec::testsupport;

// ---------------------------------------------------------------------------
// Losses

TEST_CASE("hinge loss outside and on the margin boundary") {
  LossValue lv = loss_and_subgradient(LossKind::hinge, 2.0, +1);
  CHECK(lv.loss == 0.0);
  CHECK(lv.scale == 0.0);

  // Boundary margin of exactly 1 counts as satisfied.
  lv = loss_and_subgradient(LossKind::hinge, 1.0, +1);
  CHECK(lv.loss == 0.0);
  CHECK(lv.scale == 0.0);

  lv = loss_and_subgradient(LossKind::hinge, 0.25, +1);
  CHECK(lv.loss == doctest::Approx(0.75));
  CHECK(lv.scale == -1.0);

  lv = loss_and_subgradient(LossKind::hinge, -0.5, -1);
  CHECK(lv.loss == doctest::Approx(1.5));
  CHECK(lv.scale == +1.0);
}

TEST_CASE("logistic loss at zero margin") {
  LossValue lv = loss_and_subgradient(LossKind::logistic, 0.0, +1);
  CHECK(lv.loss == doctest::Approx(std::log(2.0)));
  CHECK(lv.scale == doctest::Approx(-0.5));
}

TEST_CASE("logistic loss is finite on extreme margins") {
  for (double m : {-1000.0, -50.0, 50.0, 1000.0}) {
    LossValue lv = loss_and_subgradient(LossKind::logistic, m, +1);
    CHECK(std::isfinite(lv.loss));
    CHECK(std::isfinite(lv.scale));
  }
  // Deep negative margin: loss is ~|m|, slope saturates at -y.
  LossValue lv = loss_and_subgradient(LossKind::logistic, -1000.0, +1);
  CHECK(lv.loss == doctest::Approx(1000.0));
  CHECK(lv.scale == doctest::Approx(-1.0));
}

TEST_CASE("logistic subgradient matches finite differences") {
  Rng rng(4);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    double t = (rng.next_double() - 0.5) * 10.0;  // w.x
    int y = rng.next_below(2) ? +1 : -1;
    const double delta = 1e-5;
    LossValue at = loss_and_subgradient(LossKind::logistic, y * t, y);
    LossValue hi = loss_and_subgradient(LossKind::logistic, y * (t + delta), y);
    LossValue lo = loss_and_subgradient(LossKind::logistic, y * (t - delta), y);
    double fd = (hi.loss - lo.loss) / (2 * delta);
    CHECK(std::fabs(fd - at.scale) <= 1e-6 * std::max(1.0, std::fabs(at.scale)));
    ++checked;
  }
  CHECK(checked == 500);
}

TEST_CASE("hinge subgradient matches finite differences away from the kink") {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    double t = (rng.next_double() - 0.5) * 10.0;
    int y = rng.next_below(2) ? +1 : -1;
    const double delta = 1e-5;
    if (std::fabs(y * t - 1.0) < 2 * delta) continue;  // skip the kink
    LossValue at = loss_and_subgradient(LossKind::hinge, y * t, y);
    LossValue hi = loss_and_subgradient(LossKind::hinge, y * (t + delta), y);
    LossValue lo = loss_and_subgradient(LossKind::hinge, y * (t - delta), y);
    double fd = (hi.loss - lo.loss) / (2 * delta);
    CHECK(std::fabs(fd - at.scale) <= 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Adaptive subgradient step

namespace {

Hyperparams plain_hyperparams(double l1 = 0.0, double l2 = 0.0,
                              LossKind loss = LossKind::hinge) {
  Hyperparams h;
  h.lambda1 = l1;
  h.lambda2 = l2;
  h.loss = loss;
  h.eta0 = 0.5;
  return h;
}

}  // namespace

TEST_CASE("zero gradient with zero lambda1 leaves weights untouched") {
  OptimizerState state;
  state.grad_sq_accum = {1.0, 2.0};
  std::vector<double> w = {0.3, -0.7};
  adagrad_step(state, w, {0.0, 0.0}, plain_hyperparams(), 2);
  CHECK(w[0] == 0.3);
  CHECK(w[1] == -0.7);
  CHECK(state.grad_sq_accum[0] == 1.0);
  CHECK(state.grad_sq_accum[1] == 2.0);
}

TEST_CASE("first step from zero moves each coordinate by eta0") {
  OptimizerState state;
  state.grad_sq_accum = {0.0, 0.0};
  std::vector<double> w = {0.0, 0.0};
  adagrad_step(state, w, {2.0, -1.0}, plain_hyperparams(), 2);
  // r_j = 0.5 / |g_j| up to epsilon, so each coordinate moves 0.5 * sign.
  CHECK(w[0] == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(w[1] == doctest::Approx(+0.5).epsilon(1e-8));
  CHECK(state.step_count == 1);
}

TEST_CASE("ten-step recurrence matches a scripted oracle") {
  // Fixed 2-D stream of examples; the oracle below replays the published
  // update rule with scalar arithmetic, independent of the library path.
  const std::vector<std::array<double, 2>> xs = {
      {0.8, -0.4}, {-1.2, 0.3}, {0.5, 0.9},  {-0.7, -1.1}, {1.4, 0.2},
      {0.1, -0.8}, {-0.3, 0.6}, {0.9, -1.3}, {-1.0, 0.4},  {0.6, 0.7}};
  const std::vector<int> ys = {+1, -1, +1, +1, -1, -1, +1, -1, +1, -1};

  for (double lambda1 : {0.0, 0.1}) {
    for (LossKind loss : {LossKind::hinge, LossKind::logistic}) {
      const double lambda2 = 0.01;
      Hyperparams h = plain_hyperparams(lambda1, lambda2, loss);

      // Library path.
      OptimizerState state;
      state.grad_sq_accum = {0.0, 0.0};
      std::vector<double> w = {0.0, 0.0};
      for (int step = 0; step < 10; ++step) {
        double margin = ys[step] * (w[0] * xs[step][0] + w[1] * xs[step][1]);
        LossValue lv = loss_and_subgradient(loss, margin, ys[step]);
        std::vector<double> g = {lv.scale * xs[step][0] + lambda2 * w[0],
                                 lv.scale * xs[step][1] + lambda2 * w[1]};
        adagrad_step(state, w, g, h, 2);
      }

      // Oracle replay.
      double ow0 = 0.0, ow1 = 0.0, G0 = 0.0, G1 = 0.0;
      const double eps = 1e-8, eta = 0.5;
      for (int step = 0; step < 10; ++step) {
        double margin = ys[step] * (ow0 * xs[step][0] + ow1 * xs[step][1]);
        double scale;
        if (loss == LossKind::hinge) {
          scale = margin < 1.0 ? -double(ys[step]) : 0.0;
        } else {
          scale = -double(ys[step]) / (1.0 + std::exp(margin));
        }
        double g0 = scale * xs[step][0] + lambda2 * ow0;
        double g1 = scale * xs[step][1] + lambda2 * ow1;
        G0 += g0 * g0;
        G1 += g1 * g1;
        double r0 = eta / std::sqrt(G0 + eps);
        double r1 = eta / std::sqrt(G1 + eps);
        double u0 = ow0 - r0 * g0;
        double u1 = ow1 - r1 * g1;
        auto shrink = [&](double u, double r) {
          double s = std::fabs(u) - r * lambda1;
          return s > 0.0 ? std::copysign(s, u) : 0.0;
        };
        ow0 = shrink(u0, r0);
        ow1 = shrink(u1, r1);
      }
      CHECK(std::fabs(w[0] - ow0) < 1e-12);
      CHECK(std::fabs(w[1] - ow1) < 1e-12);
    }
  }
}

TEST_CASE("accumulator never decreases") {
  Rng rng(21);
  OptimizerState state;
  state.grad_sq_accum = {0.0, 0.0, 0.0};
  std::vector<double> w = {0.0, 0.0, 0.0};
  std::vector<double> prev = state.grad_sq_accum;
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g = {rng.next_double() - 0.5, rng.next_double() - 0.5,
                             rng.next_double() - 0.5};
    adagrad_step(state, w, g, plain_hyperparams(0.01, 0.0), 3);
    for (int j = 0; j < 3; ++j) CHECK(state.grad_sq_accum[j] >= prev[j]);
    prev = state.grad_sq_accum;
  }
}

TEST_CASE("lambda1 = 0 reduces the composite step to the plain update") {
  Rng rng(33);
  OptimizerState s1, s2;
  s1.grad_sq_accum = {0.0, 0.0};
  s2.grad_sq_accum = {0.0, 0.0};
  std::vector<double> w1 = {0.2, -0.4}, w2 = {0.2, -0.4};
  for (int step = 0; step < 20; ++step) {
    std::vector<double> g = {rng.next_double() - 0.5, rng.next_double() - 0.5};
    adagrad_step(s1, w1, g, plain_hyperparams(0.0, 0.0), 2);
    // Plain update by hand.
    for (int j = 0; j < 2; ++j) {
      s2.grad_sq_accum[j] += g[j] * g[j];
      w2[j] -= plain_hyperparams().eta0 /
               std::sqrt(s2.grad_sq_accum[j] + s2.epsilon) * g[j];
    }
    CHECK(w1[0] == doctest::Approx(w2[0]).epsilon(1e-15));
    CHECK(w1[1] == doctest::Approx(w2[1]).epsilon(1e-15));
  }
}

TEST_CASE("non-finite gradients abort with a diagnostic") {
  OptimizerState state;
  state.grad_sq_accum = {0.0};
  std::vector<double> w = {0.0};
  std::vector<double> g = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(adagrad_step(state, w, g, plain_hyperparams(), 1), Error);
}

// ---------------------------------------------------------------------------
// Binary training

namespace {

// Two 2-D Gaussian-ish blobs separated along x with margin ~1.
void make_blobs(int n_per_class, std::uint64_t seed,
                std::vector<std::vector<double>>* xs, std::vector<int>* ys) {
  Rng rng(seed, "blobs");
  for (int i = 0; i < n_per_class; ++i) {
    double jx = (rng.next_double() - 0.5), jy = (rng.next_double() - 0.5);
    xs->push_back({2.0 + jx, jy});
    ys->push_back(+1);
    jx = (rng.next_double() - 0.5);
    jy = (rng.next_double() - 0.5);
    xs->push_back({-2.0 + jx, jy});
    ys->push_back(-1);
  }
}

}  // namespace

TEST_CASE("separable blobs train to >= 0.99 accuracy in 10 epochs") {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  make_blobs(100, 1, &xs, &ys);
  Hyperparams h = plain_hyperparams(0.0, 1e-6, LossKind::hinge);
  LinearModel model = train_binary(xs, ys, h, "blob");
  int correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double s = predict_score(model, xs[i]);
    if ((s > 0 ? +1 : -1) == ys[i]) ++correct;
  }
  CHECK(double(correct) / double(xs.size()) >= 0.99);

  SUBCASE("positives outscore negatives on at least 99% of pairs") {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      (ys[i] > 0 ? pos : neg).push_back(predict_score(model, xs[i]));
    }
    std::size_t wins = 0, pairs = 0;
    for (double p : pos) {
      for (double n : neg) {
        wins += p > n;
        ++pairs;
      }
    }
    CHECK(double(wins) / double(pairs) >= 0.99);
  }
}

TEST_CASE("strong lambda1 zeroes at least 90% of 100-D random weights") {
  Rng rng(7);
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(100);
    for (double& v : x) v = rng.next_double() - 0.5;
    xs.push_back(std::move(x));
    ys.push_back(rng.next_below(2) ? +1 : -1);
  }
  Hyperparams strong = plain_hyperparams(10.0, 0.0, LossKind::logistic);
  LinearModel sparse = train_binary(xs, ys, strong, "sparse");
  int zeros = 0;
  for (double w : sparse.weights) zeros += w == 0.0;
  CHECK(zeros >= 90);

  Hyperparams none = plain_hyperparams(0.0, 0.0, LossKind::logistic);
  LinearModel dense = train_binary(xs, ys, none, "dense");
  zeros = 0;
  for (double w : dense.weights) zeros += w == 0.0;
  CHECK(zeros < 5);
}

TEST_CASE("training twice with one seed is bitwise identical") {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  make_blobs(50, 3, &xs, &ys);
  Hyperparams h = plain_hyperparams(1e-4, 1e-5, LossKind::logistic);
  h.seed = 11;
  LinearModel a = train_binary(xs, ys, h, "dup");
  LinearModel b = train_binary(xs, ys, h, "dup");
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("training validates labels and dimensions") {
  std::vector<std::vector<double>> xs = {{1.0, 2.0}, {3.0, 4.0}};
  std::vector<int> one_class = {+1, +1};
  CHECK_THROWS_AS(train_binary(xs, one_class, plain_hyperparams(), "x"), Error);

  std::vector<std::vector<double>> ragged = {{1.0, 2.0}, {3.0}};
  std::vector<int> ys = {+1, -1};
  CHECK_THROWS_AS(train_binary(ragged, ys, plain_hyperparams(), "x"), Error);
}

TEST_CASE("objective decreases in expectation from early to late epochs") {
  // Overlapping classes keep the loss term positive at the optimum, so late
  // epochs measurably beat the first one. Averaged over seeds because a
  // single stochastic run may wobble.
  for (LossKind loss : {LossKind::hinge, LossKind::logistic}) {
    double early_total = 0.0, late_total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::vector<std::vector<double>> xs;
      std::vector<int> ys;
      Rng rng(seed, "overlap");
      for (int i = 0; i < 60; ++i) {
        double jx = 2.0 * (rng.next_double() - 0.5);
        double jy = 2.0 * (rng.next_double() - 0.5);
        xs.push_back({0.5 + jx, jy});
        ys.push_back(+1);
        jx = 2.0 * (rng.next_double() - 0.5);
        jy = 2.0 * (rng.next_double() - 0.5);
        xs.push_back({-0.5 + jx, jy});
        ys.push_back(-1);
      }
      Hyperparams h = plain_hyperparams(1e-5, 1e-4, loss);
      h.seed = seed;
      auto objective = [&](const LinearModel& m) {
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          double margin = ys[i] * predict_score(m, xs[i]);
          total += loss_and_subgradient(loss, margin, ys[i]).loss;
        }
        double l1 = 0.0, l2 = 0.0;
        for (double w : m.weights) {
          l1 += std::fabs(w);
          l2 += w * w;
        }
        return h.lambda1 * l1 + 0.5 * h.lambda2 * l2 + total;
      };
      Hyperparams early = h;
      early.epochs = 1;
      Hyperparams late = h;
      late.epochs = 12;
      early_total += objective(train_binary(xs, ys, early, "obj"));
      late_total += objective(train_binary(xs, ys, late, "obj"));
    }
    CHECK(late_total <= early_total + 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Prediction

TEST_CASE("zero weights score zero everywhere") {
  LinearModel model;
  model.weights = {0.0, 0.0, 0.0};
  CHECK(predict_score(model, {5.0, -3.0, 2.0}) == 0.0);
}

TEST_CASE("a unit weight vector reads off one coordinate") {
  LinearModel model;
  model.weights = {1.0, 0.0};
  CHECK(predict_score(model, {3.0, 9.0}) == 3.0);
  CHECK_THROWS_AS(predict_score(model, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("prediction ordering survives evaluation-set reordering") {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  make_blobs(40, 23, &xs, &ys);
  LinearModel model =
      train_binary(xs, ys, plain_hyperparams(0.0, 1e-6), "order");
  std::vector<double> forward, backward;
  for (const auto& x : xs) forward.push_back(predict_score(model, x));
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
    backward.push_back(predict_score(model, *it));
  }
  std::reverse(backward.begin(), backward.end());
  CHECK(forward == backward);
}

// ---------------------------------------------------------------------------
// One-vs-all and hyperparameter selection

namespace {

// Manifest + channel with k separable synthetic classes.
void make_multiclass(int k, int per_class, std::uint64_t seed,
                     Manifest* manifest, FeatureChannel* channel) {
  Rng rng(seed, "multiclass");
  manifest->classes.clear();
  manifest->records.clear();
  for (int c = 0; c < k; ++c) {
    manifest->classes.push_back("class" + std::to_string(c));
  }
  channel->name = "syn30";
  channel->dim = k + 2;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      ImageRecord r;
      r.id = "c" + std::to_string(c) + "_" + std::to_string(i);
      r.path = r.id;
      r.labels = {manifest->classes[c]};
      manifest->records.push_back(r);
      std::vector<double> x(k + 2);
      for (double& v : x) v = 0.3 * (rng.next_double() - 0.5);
      x[c] += 2.0;  // informative coordinate per class
      channel->vectors.emplace(manifest->records.back().id, std::move(x));
    }
  }
}

}  // namespace

TEST_CASE("one-vs-all trains per-class models that argmax correctly") {
  Manifest manifest;
  FeatureChannel channel;
  make_multiclass(3, 60, 2, &manifest, &channel);
  Manifest split = split_dataset(manifest, 5, {});
  Hyperparams h = plain_hyperparams(0.0, 1e-6);
  MultiModel multi = train_one_vs_all(split, channel, h);
  REQUIRE(multi.models.size() == 3);
  CHECK(multi.trained_split == "train");

  int correct = 0, total = 0;
  for (const ImageRecord& r : split.records) {
    if (r.split != Split::test) continue;
    double best = -1e18;
    std::string best_class;
    for (const LinearModel& m : multi.models) {
      double s = predict_score(m, channel.vector_for(r.id));
      if (s > best) {
        best = s;
        best_class = m.class_name;
      }
    }
    correct += best_class == r.labels[0];
    ++total;
  }
  CHECK(double(correct) / double(total) >= 0.95);
}

TEST_CASE("one-vs-all handles a single-class manifest") {
  // Unlabeled records supply the negatives for the lone class.
  Manifest manifest;
  manifest.classes = {"class0"};
  FeatureChannel channel;
  channel.name = "syn";
  channel.dim = 2;
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    ImageRecord r;
    r.id = "r" + std::to_string(i);
    r.path = r.id;
    if (i < 15) r.labels = {"class0"};
    r.split = Split::train;
    manifest.records.push_back(r);
    std::vector<double> x = {rng.next_double() - 0.5, rng.next_double() - 0.5};
    if (i < 15) x[0] += 2.0;
    channel.vectors.emplace(manifest.records.back().id, std::move(x));
  }
  MultiModel multi = train_one_vs_all(manifest, channel, plain_hyperparams());
  CHECK(multi.models.size() == 1);
}

TEST_CASE("one-vs-all trains twenty models for twenty classes") {
  Manifest manifest;
  FeatureChannel channel;
  make_multiclass(20, 12, 4, &manifest, &channel);
  for (auto& r : manifest.records) r.split = Split::train;
  MultiModel multi =
      train_one_vs_all(manifest, channel, plain_hyperparams(0.0, 1e-6));
  CHECK(multi.models.size() == 20);
}

TEST_CASE("selection returns the single config of a singleton grid") {
  Manifest manifest;
  FeatureChannel channel;
  make_multiclass(2, 40, 6, &manifest, &channel);
  Manifest split = split_dataset(manifest, 1, {});
  std::vector<Hyperparams> grid = {plain_hyperparams(1e-5, 1e-5)};
  SelectionResult result = select_hyperparams(grid, split, channel, 0);
  CHECK(result.table.size() == 1);
  CHECK(result.best.lambda1 == 1e-5);
}

TEST_CASE("over-regularization loses the validation sweep") {
  Manifest manifest;
  FeatureChannel channel;
  make_multiclass(2, 80, 8, &manifest, &channel);
  Manifest split = split_dataset(manifest, 2, {});
  Hyperparams small = plain_hyperparams(0.0, 1e-6);
  Hyperparams huge = plain_hyperparams(0.0, 1e6);
  SelectionResult result = select_hyperparams({huge, small}, split, channel, 3);
  CHECK(result.best.lambda2 == 1e-6);
  REQUIRE(result.table.size() == 2);
  CHECK(result.table[0].mean_ap <= result.table[1].mean_ap);
}

TEST_CASE("the default grid covers both losses and all lambda pairs") {
  std::vector<Hyperparams> grid = default_grid(LossKind::hinge, true, 10, 0);
  CHECK(grid.size() == 32);
  Manifest manifest;
  FeatureChannel channel;
  make_multiclass(2, 30, 10, &manifest, &channel);
  Manifest split = split_dataset(manifest, 3, {});
  SelectionResult result = select_hyperparams(grid, split, channel, 1);
  CHECK(result.table.size() == 32);
}

// ---------------------------------------------------------------------------
// Model files

TEST_CASE("model save/load round trip preserves every field bit for bit") {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  make_blobs(30, 12, &xs, &ys);
  Hyperparams h = plain_hyperparams(1e-4, 1e-3, LossKind::logistic);
  h.seed = 77;
  LinearModel model = train_binary(xs, ys, h, "Sunny", "lab_hist");

  std::string dir = ts::make_temp_dir("model");
  std::string path = dir + "/sunny.smdl";
  save_model(model, path, "train");
  std::string split;
  LinearModel loaded = load_model(path, &split);

  CHECK(split == "train");
  CHECK(loaded.class_name == "Sunny");
  CHECK(loaded.channel == "lab_hist");
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.feature_mean == model.feature_mean);
  CHECK(loaded.feature_scale == model.feature_scale);
  CHECK(loaded.hyperparams.lambda1 == h.lambda1);
  CHECK(loaded.hyperparams.loss == h.loss);
  for (const auto& x : xs) {
    CHECK(predict_score(loaded, x) == predict_score(model, x));
  }
  ts::remove_dir(dir);
}

TEST_CASE("model loader rejects foreign files") {
  std::string dir = ts::make_temp_dir("model_bad");
  std::string path = dir + "/bad.smdl";
  {
    std::ofstream out(path);
    out << "{\"magic\": \"WRONG\"}\n";
  }
  CHECK_THROWS_AS(load_model(path), Error);
  ts::remove_dir(dir);
}
