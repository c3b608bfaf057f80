#ifndef STYLEREC_GIST_HPP_
#define STYLEREC_GIST_HPP_

#include <vector>

#include "stylerec/image.hpp"

namespace stylerec {

// Frequency-domain Gabor transfer functions on an n x n grid. The bank is
// strictly zero-mean: every filter's DC coefficient is forced to zero.
struct GaborBank {
  int size = 0;                             // grid side n
  std::vector<int> orientations_per_scale;  // e.g. {8, 8, 4}
  std::vector<std::vector<double>> transfer;  // one n*n transfer per filter

  int filter_count() const { return static_cast<int>(transfer.size()); }
  // Index of the filter at (scale, orientation).
  int filter_index(int scale, int orientation) const;
  // Orientation angle parameter of a filter, as built.
  double filter_angle(int scale, int orientation) const;
};

GaborBank make_gabor_bank(int size, const std::vector<int>& orientations_per_scale);

// Oliva-Torralba style whitening + local contrast normalization, computed
// with periodic boundaries on the n x n raster. Input values are expected on
// the 0..255 scale.
GrayImage gist_prefilter(const GrayImage& channel);

// Mean over a grid x grid tiling of non-overlapping blocks, row-major.
std::vector<double> pool_grid(const GrayImage& response, int grid);

// Magnitude response of one bank filter (circular convolution).
GrayImage gabor_response(const GrayImage& channel, const GaborBank& bank,
                         int filter);

}  // namespace stylerec

#endif  // STYLEREC_GIST_HPP_
