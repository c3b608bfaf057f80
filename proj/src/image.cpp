#include "stylerec/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

#include "stylerec/error.hpp"

namespace stylerec {

ImageRgb make_image(int width, int height, std::uint8_t r, std::uint8_t g,
                    std::uint8_t b) {
  ImageRgb img;
  img.width = width;
  img.height = height;
  img.pixels.resize(3 * std::size_t(width) * height);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

namespace {

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t count) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + count > state->size) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, state->data + state->offset, count);
  state->offset += count;
}

ImageRgb decode_png(const std::uint8_t* bytes, std::size_t size) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw_internal("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw_internal("png_create_info_struct failed");
  }

  ImageRgb img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw_data("corrupt PNG payload");
  }

  PngReadState state{bytes, size, 0};
  png_set_read_fn(png, &state, png_read_fn);
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.pixels.resize(3 * std::size_t(width) * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = img.pixels.data() + 3 * std::size_t(width) * y;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

ImageRgb decode_jpeg(const std::uint8_t* bytes, std::size_t size) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  ImageRgb img;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw_data("corrupt JPEG payload");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes, static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.pixels.resize(3 * std::size_t(img.width) * img.height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row =
        img.pixels.data() + 3 * std::size_t(img.width) * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

ImageRgb decode_image(const std::uint8_t* bytes, std::size_t size) {
  static const std::uint8_t png_magic[8] = {0x89, 0x50, 0x4e, 0x47,
                                            0x0d, 0x0a, 0x1a, 0x0a};
  if (size >= 8 && std::memcmp(bytes, png_magic, 8) == 0) {
    return decode_png(bytes, size);
  }
  if (size >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return decode_jpeg(bytes, size);
  }
  throw_data("unsupported image format (expected PNG or JPEG)");
}

ImageRgb decode_image(const std::vector<std::uint8_t>& bytes) {
  return decode_image(bytes.data(), bytes.size());
}

ImageRgb load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open image: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const ImageRgb& img) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw_internal("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw_internal("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw_internal("PNG encode failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t count) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + count);
      },
      nullptr);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.at(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void save_png(const ImageRgb& img, const std::string& path) {
  std::vector<std::uint8_t> bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write image: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data("write failed: " + path);
}

ImageRgb resize(const ImageRgb& img, int width, int height) {
  if (width < 1 || height < 1) throw_data("resize target must be positive");
  ImageRgb out;
  out.width = width;
  out.height = height;
  out.pixels.resize(3 * std::size_t(width) * height);

  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = std::min(y0 + 1, img.height - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    for (int x = 0; x < width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = std::min(x0 + 1, img.width - 1);
      x0 = std::clamp(x0, 0, img.width - 1);
      const std::uint8_t* p00 = img.at(x0, y0);
      const std::uint8_t* p10 = img.at(x1, y0);
      const std::uint8_t* p01 = img.at(x0, y1);
      const std::uint8_t* p11 = img.at(x1, y1);
      std::uint8_t* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                   wy * ((1 - wx) * p01[c] + wx * p11[c]);
        dst[c] = static_cast<std::uint8_t>(
            std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

ImageRgb center_crop(const ImageRgb& img, int side) {
  if (side < 1) throw_data("crop side must be positive");
  if (side > img.width || side > img.height) {
    throw_data("crop side exceeds image dimensions");
  }
  int ox = (img.width - side) / 2;
  int oy = (img.height - side) / 2;
  ImageRgb out;
  out.width = side;
  out.height = side;
  out.pixels.resize(3 * std::size_t(side) * side);
  for (int y = 0; y < side; ++y) {
    std::memcpy(out.at(0, y), img.at(ox, oy + y), 3 * std::size_t(side));
  }
  return out;
}

namespace {

// sRGB -> XYZ (D65), IEC 61966-2-1 primaries.
constexpr double kSrgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

double inverse_gamma(std::uint8_t v) {
  double c = v / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  constexpr double d3 = d * d * d;
  return t > d3 ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

}  // namespace

ImageLab srgb_to_cielab(const ImageRgb& img) {
  ImageLab out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.pixels.size());

  // 256-entry gamma table; every pixel channel takes one of these values.
  double gamma[256];
  for (int i = 0; i < 256; ++i) gamma[i] = inverse_gamma(std::uint8_t(i));

  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    double r = gamma[img.pixels[i]];
    double g = gamma[img.pixels[i + 1]];
    double b = gamma[img.pixels[i + 2]];
    double x = kSrgbToXyz[0][0] * r + kSrgbToXyz[0][1] * g + kSrgbToXyz[0][2] * b;
    double y = kSrgbToXyz[1][0] * r + kSrgbToXyz[1][1] * g + kSrgbToXyz[1][2] * b;
    double z = kSrgbToXyz[2][0] * r + kSrgbToXyz[2][1] * g + kSrgbToXyz[2][2] * b;
    double fx = lab_f(x / kWhiteX);
    double fy = lab_f(y / kWhiteY);
    double fz = lab_f(z / kWhiteZ);
    // The matrix's Y row sums to 1 + 1e-7, so clamp the residual overshoot.
    out.pixels[i] = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
    out.pixels[i + 1] = 500.0 * (fx - fy);
    out.pixels[i + 2] = 200.0 * (fy - fz);
  }
  return out;
}

GrayImage rgb_to_gray(const ImageRgb& img) {
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.values.resize(std::size_t(img.width) * img.height);
  for (std::size_t i = 0, p = 0; i < out.values.size(); ++i, p += 3) {
    out.values[i] = (0.299 * img.pixels[p] + 0.587 * img.pixels[p + 1] +
                     0.114 * img.pixels[p + 2]) /
                    255.0;
  }
  return out;
}

GrayImage resize_gray(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1) throw_data("resize target must be positive");
  GrayImage out;
  out.width = width;
  out.height = height;
  out.values.resize(std::size_t(width) * height);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = std::min(y0 + 1, img.height - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    for (int x = 0; x < width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = std::min(x0 + 1, img.width - 1);
      x0 = std::clamp(x0, 0, img.width - 1);
      out.values[std::size_t(y) * width + x] =
          (1 - wy) * ((1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
          wy * ((1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
    }
  }
  return out;
}

}  // namespace stylerec
