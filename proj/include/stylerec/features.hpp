#ifndef STYLEREC_FEATURES_HPP_
#define STYLEREC_FEATURES_HPP_

#include <map>
#include <string>
#include <vector>

#include "stylerec/data.hpp"
#include "stylerec/image.hpp"

namespace stylerec {

constexpr int kLabHistDim = 784;   // 4 x 14 x 14 joint bins
constexpr int kGistDim = 960;      // 3 channels x 20 filters x 4x4 grid
constexpr int kSaliencyDim = 1024; // 32 x 32 master map

struct FeatureVector {
  std::string channel;
  std::vector<double> values;
};

// A named family of dense vectors, one per image id.
struct FeatureChannel {
  std::string name;
  int dim = 0;
  std::map<std::string, std::vector<double>> vectors;

  const std::vector<double>& vector_for(const std::string& id) const;
  bool covers(const std::string& id) const { return vectors.count(id) != 0; }
};

// Joint CIELAB histogram with 4/14/14 uniform bins over L in [0,100] and
// a, b in [-110,110]; out-of-range values clip into the edge bins; the
// result sums to one. Index layout is L-major, then a, then b.
FeatureVector lab_histogram(const ImageLab& img);

// 960-dimensional color descriptor: each channel is prefiltered, pushed
// through the 3-scale (8/8/4 orientation) Gabor bank, and the response
// magnitudes are averaged over a 4x4 grid. Input is stretched to 256x256.
FeatureVector color_gist(const ImageRgb& img);

// 1024-dimensional saliency map: seven feature maps (intensity, two color
// opponency, four orientations) at 32x32, each run through the graph-based
// activation and normalization passes, summed and renormalized to sum one.
FeatureVector gbvs_saliency(const ImageRgb& img);

enum class NativeChannel { lab_hist, gist, saliency };

const char* native_channel_name(NativeChannel c);
NativeChannel native_channel_from_name(const std::string& name);
int native_channel_dim(NativeChannel c);

FeatureVector extract_native(const ImageRgb& img, NativeChannel channel);

struct ExtractFailure {
  std::string id;
  std::string message;
};

struct ExtractResult {
  FeatureChannel channel;
  std::vector<ExtractFailure> failures;
};

// Batch driver: one vector per readable record; unreadable or corrupt
// images are reported per id rather than aborting the batch.
ExtractResult extract_channel(const Manifest& manifest, NativeChannel channel);

// Binary feature file: magic "FVEC1", u32 LE dim, u64 LE row count, then
// row-major 32-bit LE floats. Sidecar index at <path>.idx holds JSON Lines
// of {"row": n, "id": "..."}.
void write_feature_file(const FeatureChannel& channel, const std::string& path);
FeatureChannel load_feature_file(const std::string& path,
                                 const std::string& name = "");

}  // namespace stylerec

#endif  // STYLEREC_FEATURES_HPP_
