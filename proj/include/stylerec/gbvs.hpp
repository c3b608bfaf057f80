#ifndef STYLEREC_GBVS_HPP_
#define STYLEREC_GBVS_HPP_

#include <vector>

#include "stylerec/image.hpp"

namespace stylerec {

// Markov-chain saliency machinery. Maps are row-major w x h rasters treated
// as N = w*h chain states; transition matrices are dense row-stochastic
// N x N, row index = source state.

// Row-stochastic chain whose edge weights are |M(i) - M(j)| scaled by a
// Gaussian in the grid distance. Rows with no outgoing mass fall back to
// uniform transitions.
std::vector<double> dissimilarity_chain(const std::vector<double>& map,
                                        int width, int height, double sigma);

// Mass-concentration chain used by the normalization pass: weight into state
// j is proportional to the activation at j times the distance kernel.
std::vector<double> concentration_chain(const std::vector<double>& map,
                                        int width, int height, double sigma);

struct EquilibriumResult {
  std::vector<double> distribution;
  bool converged = false;
  int iterations = 0;
};

// Stationary distribution by power iteration from the uniform start.
// Failure to converge inside the cap yields the uniform distribution with
// converged = false.
EquilibriumResult markov_equilibrium(const std::vector<double>& transition,
                                     int n, int max_iterations = 10000,
                                     double tolerance = 1e-9);

// Pass 1: equilibrium of the dissimilarity chain; constant maps yield the
// uniform distribution directly.
std::vector<double> gbvs_activation(const std::vector<double>& map, int width,
                                    int height, double sigma);

// Pass 2: equilibrium of the concentration chain over an activation map;
// constant activations pass through unchanged.
std::vector<double> gbvs_normalize(const std::vector<double>& activation,
                                   int width, int height, double sigma);

}  // namespace stylerec

#endif  // STYLEREC_GBVS_HPP_
