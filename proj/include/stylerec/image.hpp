#ifndef STYLEREC_IMAGE_HPP_
#define STYLEREC_IMAGE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace stylerec {

// 8-bit non-linear sRGB raster, row-major RGB triples.
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  std::uint8_t* at(int x, int y) { return &pixels[3 * (std::size_t(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[3 * (std::size_t(y) * width + x)];
  }
};

// CIELAB raster (D65, 2 degree observer). L in [0,100], a and b in [-110,110].
struct ImageLab {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // 3 * width * height, (L, a, b) triples

  const double* at(int x, int y) const {
    return &pixels[3 * (std::size_t(y) * width + x)];
  }
};

// Single-channel raster of reals, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

ImageRgb make_image(int width, int height, std::uint8_t r, std::uint8_t g,
                    std::uint8_t b);

// Decodes a JPEG or PNG payload (dispatch on magic bytes).
ImageRgb decode_image(const std::uint8_t* bytes, std::size_t size);
ImageRgb decode_image(const std::vector<std::uint8_t>& bytes);
ImageRgb load_image(const std::string& path);

// PNG encoder, used by the batch tools and tests to materialize rasters.
std::vector<std::uint8_t> encode_png(const ImageRgb& img);
void save_png(const ImageRgb& img, const std::string& path);

// Bilinear resize with half-pixel-center alignment; channel values round
// half up. Resizing to the source size reproduces the input exactly.
ImageRgb resize(const ImageRgb& img, int width, int height);

// Central side x side window; odd margins drop the extra row/column at the
// bottom/right edge.
ImageRgb center_crop(const ImageRgb& img, int side);

// Inverse sRGB gamma -> linear RGB -> XYZ (D65) -> CIELAB per pixel.
ImageLab srgb_to_cielab(const ImageRgb& img);

// Rec.601 luma on the non-linear 8-bit values, scaled to [0,1].
GrayImage rgb_to_gray(const ImageRgb& img);

// Float-raster bilinear resize (no rounding), shared by the feature
// extractors for their working resolutions.
GrayImage resize_gray(const GrayImage& img, int width, int height);

}  // namespace stylerec

#endif  // STYLEREC_IMAGE_HPP_
