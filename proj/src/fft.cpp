#include "stylerec/fft.hpp"

#include <cmath>
#include <numbers>

#include "stylerec/error.hpp"

namespace stylerec {

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw_internal("FFT size must be a power of two");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double angle = 2.0 * std::numbers::pi / static_cast<double>(len);
    if (!inverse) angle = -angle;
    std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = data[i + k];
        std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

void fft2d_inplace(std::vector<std::complex<double>>& data, int width,
                   int height, bool inverse) {
  std::vector<std::complex<double>> line;
  line.resize(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) line[x] = data[std::size_t(y) * width + x];
    fft_inplace(line, inverse);
    for (int x = 0; x < width; ++x) data[std::size_t(y) * width + x] = line[x];
  }
  line.resize(static_cast<std::size_t>(height));
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) line[y] = data[std::size_t(y) * width + x];
    fft_inplace(line, inverse);
    for (int y = 0; y < height; ++y) data[std::size_t(y) * width + x] = line[y];
  }
}

std::vector<std::complex<double>> apply_transfer(
    const std::vector<std::complex<double>>& spectrum,
    const std::vector<double>& transfer, int width, int height) {
  std::vector<std::complex<double>> out(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    out[i] = spectrum[i] * transfer[i];
  }
  std::vector<std::complex<double>> result = std::move(out);
  fft2d_inplace(result, width, height, true);
  return result;
}

}  // namespace stylerec
