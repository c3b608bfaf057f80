#ifndef STYLEREC_TESTS_SYNTH_HPP_
#define STYLEREC_TESTS_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "stylerec/data.hpp"
#include "stylerec/image.hpp"

namespace stylerec::testsupport {

// Frozen reference payloads produced with an independent encoder (PIL).
const std::vector<std::uint8_t>& white_1x1_png();
const std::vector<std::uint8_t>& pattern_4x2_png();
const std::vector<std::uint8_t>& checker_2x2_png();
const std::vector<std::uint8_t>& solid_8x8_jpeg();  // (200, 120, 40)

// Expected raster of pattern_4x2_png, row-major RGB.
const std::vector<std::uint8_t>& pattern_4x2_raster();

// Unique scratch directory under the system temp root; removed on request.
std::string make_temp_dir(const std::string& tag);
void remove_dir(const std::string& dir);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// Seeded noise image with per-pixel uniform channels in [lo, hi].
ImageRgb noise_image(int width, int height, std::uint64_t seed,
                     std::uint8_t r_lo, std::uint8_t r_hi, std::uint8_t g_lo,
                     std::uint8_t g_hi, std::uint8_t b_lo, std::uint8_t b_hi);

// Three distinguishable looks used by the synthetic pipeline experiments:
//   dark      - low-value desaturated pixels
//   warm      - bright, red-heavy pixels
//   texture   - mid-gray pixels with high-frequency black/white speckle
ImageRgb styled_image(const std::string& style, int width, int height,
                      std::uint64_t seed);

// Writes a three-style PNG corpus (images + manifest) under dir and returns
// the manifest path. Classes are {dark, warm, texture}.
std::string write_styled_corpus(const std::string& dir, int per_class,
                                std::uint64_t seed);

}  // namespace stylerec::testsupport

#endif  // STYLEREC_TESTS_SYNTH_HPP_
