#include "stylerec/gist.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "stylerec/error.hpp"
#include "stylerec/fft.hpp"

namespace stylerec {

namespace {

// Signed frequency of FFT bin u on an n-point grid, in cycles per image.
inline double bin_freq(int u, int n) {
  return u <= n / 2 - 1 ? static_cast<double>(u) : static_cast<double>(u - n);
}

}  // namespace

int GaborBank::filter_index(int scale, int orientation) const {
  int idx = 0;
  for (int s = 0; s < scale; ++s) idx += orientations_per_scale[s];
  return idx + orientation;
}

double GaborBank::filter_angle(int scale, int orientation) const {
  return std::numbers::pi * orientation / orientations_per_scale[scale];
}

GaborBank make_gabor_bank(int size,
                          const std::vector<int>& orientations_per_scale) {
  GaborBank bank;
  bank.size = size;
  bank.orientations_per_scale = orientations_per_scale;

  const double pi = std::numbers::pi;
  for (std::size_t s = 0; s < orientations_per_scale.size(); ++s) {
    int n_orient = orientations_per_scale[s];
    double center_freq = 0.3 / std::pow(1.85, static_cast<double>(s));
    double angular_sharpness =
        16.0 * n_orient * n_orient / (32.0 * 32.0);
    for (int j = 0; j < n_orient; ++j) {
      double theta = pi * j / n_orient;
      std::vector<double> g(std::size_t(size) * size);
      for (int v = 0; v < size; ++v) {
        double fy = bin_freq(v, size);
        for (int u = 0; u < size; ++u) {
          double fx = bin_freq(u, size);
          double fr = std::sqrt(fx * fx + fy * fy);
          double t = std::atan2(fy, fx) + theta;
          if (t < -pi) t += 2 * pi;
          if (t > pi) t -= 2 * pi;
          double radial = fr / size / center_freq - 1.0;
          g[std::size_t(v) * size + u] =
              std::exp(-10.0 * 0.35 * radial * radial -
                       2.0 * angular_sharpness * pi * t * t);
        }
      }
      g[0] = 0.0;  // zero-mean bank
      bank.transfer.push_back(std::move(g));
    }
  }
  return bank;
}

GrayImage gist_prefilter(const GrayImage& channel) {
  const int w = channel.width;
  const int h = channel.height;
  const std::size_t n = channel.values.size();

  // Gaussian low-pass transfer with cutoff at 4 cycles per image.
  const double fc = 4.0;
  const double s1 = fc / std::sqrt(std::log(2.0));
  std::vector<double> lowpass(n);
  for (int v = 0; v < h; ++v) {
    double fy = bin_freq(v, h);
    for (int u = 0; u < w; ++u) {
      double fx = bin_freq(u, w);
      lowpass[std::size_t(v) * w + u] =
          std::exp(-(fx * fx + fy * fy) / (s1 * s1));
    }
  }

  std::vector<std::complex<double>> spec(n);
  for (std::size_t i = 0; i < n; ++i) {
    spec[i] = std::log(1.0 + channel.values[i]);
  }
  std::vector<std::complex<double>> logimg = spec;
  fft2d_inplace(spec, w, h, false);
  std::vector<std::complex<double>> low = apply_transfer(spec, lowpass, w, h);

  // Whiten, then divide by the local standard deviation estimate.
  std::vector<std::complex<double>> whitened(n);
  for (std::size_t i = 0; i < n; ++i) {
    whitened[i] = logimg[i].real() - low[i].real();
  }
  std::vector<std::complex<double>> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = whitened[i].real();
    sq[i] = x * x;
  }
  fft2d_inplace(sq, w, h, false);
  std::vector<std::complex<double>> localvar = apply_transfer(sq, lowpass, w, h);

  GrayImage out;
  out.width = w;
  out.height = h;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sd = std::sqrt(std::fabs(localvar[i].real()));
    out.values[i] = whitened[i].real() / (0.2 + sd);
  }
  return out;
}

std::vector<double> pool_grid(const GrayImage& response, int grid) {
  std::vector<double> out(std::size_t(grid) * grid, 0.0);
  for (int by = 0; by < grid; ++by) {
    int y0 = by * response.height / grid;
    int y1 = (by + 1) * response.height / grid;
    for (int bx = 0; bx < grid; ++bx) {
      int x0 = bx * response.width / grid;
      int x1 = (bx + 1) * response.width / grid;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += response.at(x, y);
      }
      out[std::size_t(by) * grid + bx] =
          sum / (static_cast<double>(y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

GrayImage gabor_response(const GrayImage& channel, const GaborBank& bank,
                         int filter) {
  if (channel.width != bank.size || channel.height != bank.size) {
    throw_internal("gabor_response: raster size does not match the bank");
  }
  std::vector<std::complex<double>> spec(channel.values.begin(),
                                         channel.values.end());
  fft2d_inplace(spec, channel.width, channel.height, false);
  std::vector<std::complex<double>> resp =
      apply_transfer(spec, bank.transfer[filter], channel.width, channel.height);
  GrayImage out;
  out.width = channel.width;
  out.height = channel.height;
  out.values.resize(resp.size());
  for (std::size_t i = 0; i < resp.size(); ++i) out.values[i] = std::abs(resp[i]);
  return out;
}

}  // namespace stylerec
