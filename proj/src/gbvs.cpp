#include "stylerec/gbvs.hpp"

#include <algorithm>
#include <cmath>

#include "stylerec/error.hpp"

namespace stylerec {

namespace {

// Pairwise Gaussian distance kernel over grid positions. Symmetric, so only
// the squared-distance table depends on geometry.
std::vector<double> distance_kernel(int width, int height, double sigma) {
  const int n = width * height;
  std::vector<double> kernel(std::size_t(n) * n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int a = 0; a < n; ++a) {
    int ay = a / width, ax = a % width;
    for (int b = 0; b < n; ++b) {
      int by = b / width, bx = b % width;
      double d2 = double(ax - bx) * (ax - bx) + double(ay - by) * (ay - by);
      kernel[std::size_t(a) * n + b] = std::exp(-d2 * inv);
    }
  }
  return kernel;
}

void row_normalize(std::vector<double>& weights, int n) {
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += weights[std::size_t(i) * n + j];
    if (sum <= 1e-300) {
      double u = 1.0 / n;
      for (int j = 0; j < n; ++j) weights[std::size_t(i) * n + j] = u;
    } else {
      double inv = 1.0 / sum;
      for (int j = 0; j < n; ++j) weights[std::size_t(i) * n + j] *= inv;
    }
  }
}

bool is_constant(const std::vector<double>& map) {
  auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  double scale = std::max({1.0, std::fabs(*lo), std::fabs(*hi)});
  return (*hi - *lo) <= 1e-12 * scale;
}

}  // namespace

std::vector<double> dissimilarity_chain(const std::vector<double>& map,
                                        int width, int height, double sigma) {
  const int n = width * height;
  std::vector<double> weights = distance_kernel(width, height, sigma);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      weights[std::size_t(i) * n + j] *= std::fabs(map[i] - map[j]);
    }
  }
  row_normalize(weights, n);
  return weights;
}

std::vector<double> concentration_chain(const std::vector<double>& map,
                                        int width, int height, double sigma) {
  const int n = width * height;
  std::vector<double> weights = distance_kernel(width, height, sigma);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      weights[std::size_t(i) * n + j] *= std::fabs(map[j]);
    }
  }
  row_normalize(weights, n);
  return weights;
}

EquilibriumResult markov_equilibrium(const std::vector<double>& transition,
                                     int n, int max_iterations,
                                     double tolerance) {
  EquilibriumResult result;
  std::vector<double> pi(n, 1.0 / n);
  std::vector<double> next(n);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    // Half-lazy step: next = (pi + P^T pi) / 2. The lazy operator shares
    // P's stationary distribution and stays aperiodic even when the weight
    // graph is bipartite (e.g. a single bright cell on a flat map).
    for (int j = 0; j < n; ++j) next[j] = 0.5 * pi[j];
    for (int i = 0; i < n; ++i) {
      double p = 0.5 * pi[i];
      const double* row = &transition[std::size_t(i) * n];
      for (int j = 0; j < n; ++j) next[j] += p * row[j];
    }
    // Renormalize to damp accumulated roundoff.
    double sum = 0.0;
    for (double v : next) sum += v;
    double inv = 1.0 / sum;
    double change = 0.0;
    for (int j = 0; j < n; ++j) {
      next[j] *= inv;
      change += std::fabs(next[j] - pi[j]);
    }
    pi.swap(next);
    if (change < tolerance) {
      result.distribution = std::move(pi);
      result.converged = true;
      result.iterations = iter;
      return result;
    }
  }
  result.distribution.assign(n, 1.0 / n);
  result.converged = false;
  result.iterations = max_iterations;
  return result;
}

std::vector<double> gbvs_activation(const std::vector<double>& map, int width,
                                    int height, double sigma) {
  const int n = width * height;
  if (is_constant(map)) {
    return std::vector<double>(n, 1.0 / n);
  }
  std::vector<double> chain = dissimilarity_chain(map, width, height, sigma);
  return markov_equilibrium(chain, n).distribution;
}

std::vector<double> gbvs_normalize(const std::vector<double>& activation,
                                   int width, int height, double sigma) {
  const int n = width * height;
  if (is_constant(activation)) {
    return activation;
  }
  std::vector<double> chain =
      concentration_chain(activation, width, height, sigma);
  return markov_equilibrium(chain, n).distribution;
}

}  // namespace stylerec
