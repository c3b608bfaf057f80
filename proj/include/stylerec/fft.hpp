#ifndef STYLEREC_FFT_HPP_
#define STYLEREC_FFT_HPP_

#include <complex>
#include <vector>

namespace stylerec {

// Iterative radix-2 FFT. Sizes must be powers of two; the image pipeline
// only transforms 256- and 32-sized rasters.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

// Row-column 2D transform of a row-major width x height grid.
void fft2d_inplace(std::vector<std::complex<double>>& data, int width,
                   int height, bool inverse);

// Circular convolution via pointwise product with a frequency-domain
// transfer function (same layout as fft2d output).
std::vector<std::complex<double>> apply_transfer(
    const std::vector<std::complex<double>>& spectrum,
    const std::vector<double>& transfer, int width, int height);

}  // namespace stylerec

#endif  // STYLEREC_FFT_HPP_
