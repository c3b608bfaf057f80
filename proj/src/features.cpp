#include "stylerec/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "stylerec/error.hpp"
#include "stylerec/fft.hpp"
#include "stylerec/gbvs.hpp"
#include "stylerec/gist.hpp"

namespace stylerec {

using nlohmann::json;

const std::vector<double>& FeatureChannel::vector_for(
    const std::string& id) const {
  auto it = vectors.find(id);
  if (it == vectors.end()) {
    throw_data("channel \"" + name + "\" has no vector for id \"" + id + "\"");
  }
  return it->second;
}

namespace {

constexpr int kLBins = 4;
constexpr int kABins = 14;
constexpr int kBBins = 14;

inline int clip_bin(double value, double lo, double hi, int bins) {
  double t = (value - lo) / (hi - lo) * bins;
  int b = static_cast<int>(std::floor(t));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

FeatureVector lab_histogram(const ImageLab& img) {
  FeatureVector out;
  out.channel = "lab_hist";
  out.values.assign(kLabHistDim, 0.0);
  const std::size_t n_pixels = img.pixels.size() / 3;
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    int bl = clip_bin(img.pixels[i], 0.0, 100.0, kLBins);
    int ba = clip_bin(img.pixels[i + 1], -110.0, 110.0, kABins);
    int bb = clip_bin(img.pixels[i + 2], -110.0, 110.0, kBBins);
    out.values[(std::size_t(bl) * kABins + ba) * kBBins + bb] += 1.0;
  }
  for (double& v : out.values) v /= static_cast<double>(n_pixels);
  return out;
}

namespace {

constexpr int kGistSize = 256;
constexpr int kGistGrid = 4;

const GaborBank& gist_bank() {
  static const GaborBank bank = make_gabor_bank(kGistSize, {8, 8, 4});
  return bank;
}

GrayImage channel_plane(const ImageRgb& img, int channel) {
  GrayImage g;
  g.width = img.width;
  g.height = img.height;
  g.values.resize(std::size_t(img.width) * img.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = static_cast<double>(img.pixels[3 * i + channel]);
  }
  return g;
}

}  // namespace

FeatureVector color_gist(const ImageRgb& img) {
  ImageRgb sized = (img.width == kGistSize && img.height == kGistSize)
                       ? img
                       : resize(img, kGistSize, kGistSize);
  const GaborBank& bank = gist_bank();

  FeatureVector out;
  out.channel = "gist";
  out.values.reserve(kGistDim);
  for (int c = 0; c < 3; ++c) {
    GrayImage pre = gist_prefilter(channel_plane(sized, c));
    std::vector<std::complex<double>> spec(pre.values.begin(),
                                           pre.values.end());
    fft2d_inplace(spec, kGistSize, kGistSize, false);
    for (int k = 0; k < bank.filter_count(); ++k) {
      std::vector<std::complex<double>> resp =
          apply_transfer(spec, bank.transfer[k], kGistSize, kGistSize);
      GrayImage mag;
      mag.width = kGistSize;
      mag.height = kGistSize;
      mag.values.resize(resp.size());
      for (std::size_t i = 0; i < resp.size(); ++i) {
        mag.values[i] = std::abs(resp[i]);
      }
      std::vector<double> pooled = pool_grid(mag, kGistGrid);
      out.values.insert(out.values.end(), pooled.begin(), pooled.end());
    }
  }
  return out;
}

namespace {

constexpr int kGbvsSize = 32;
constexpr double kGbvsSigma = 0.15 * kGbvsSize;

const GaborBank& gbvs_bank() {
  static const GaborBank bank = make_gabor_bank(kGbvsSize, {4});
  return bank;
}

}  // namespace

FeatureVector gbvs_saliency(const ImageRgb& img) {
  ImageRgb sized = (img.width == 256 && img.height == 256)
                       ? img
                       : resize(img, 256, 256);

  // Working-resolution channel planes on [0,1].
  GrayImage planes[3];
  for (int c = 0; c < 3; ++c) {
    GrayImage p = channel_plane(sized, c);
    for (double& v : p.values) v /= 255.0;
    planes[c] = resize_gray(p, kGbvsSize, kGbvsSize);
  }
  GrayImage gray = resize_gray(rgb_to_gray(sized), kGbvsSize, kGbvsSize);

  const std::size_t n = std::size_t(kGbvsSize) * kGbvsSize;
  std::vector<std::vector<double>> maps;
  maps.push_back(gray.values);  // intensity
  std::vector<double> rg(n), by(n);
  for (std::size_t i = 0; i < n; ++i) {
    rg[i] = planes[0].values[i] - planes[1].values[i];
    by[i] = planes[2].values[i] -
            0.5 * (planes[0].values[i] + planes[1].values[i]);
  }
  maps.push_back(std::move(rg));
  maps.push_back(std::move(by));
  const GaborBank& bank = gbvs_bank();
  for (int k = 0; k < bank.filter_count(); ++k) {
    maps.push_back(gabor_response(gray, bank, k).values);
  }

  std::vector<double> master(n, 0.0);
  for (const std::vector<double>& m : maps) {
    std::vector<double> act = gbvs_activation(m, kGbvsSize, kGbvsSize, kGbvsSigma);
    std::vector<double> norm = gbvs_normalize(act, kGbvsSize, kGbvsSize, kGbvsSigma);
    for (std::size_t i = 0; i < n; ++i) master[i] += norm[i];
  }
  double sum = 0.0;
  for (double v : master) sum += v;
  for (double& v : master) v /= sum;

  FeatureVector out;
  out.channel = "saliency";
  out.values = std::move(master);
  return out;
}

const char* native_channel_name(NativeChannel c) {
  switch (c) {
    case NativeChannel::lab_hist: return "lab_hist";
    case NativeChannel::gist: return "gist";
    case NativeChannel::saliency: return "saliency";
  }
  return "";
}

NativeChannel native_channel_from_name(const std::string& name) {
  if (name == "lab_hist") return NativeChannel::lab_hist;
  if (name == "gist") return NativeChannel::gist;
  if (name == "saliency") return NativeChannel::saliency;
  throw_usage("unknown native channel: " + name +
              " (expected lab_hist, gist, or saliency)");
}

int native_channel_dim(NativeChannel c) {
  switch (c) {
    case NativeChannel::lab_hist: return kLabHistDim;
    case NativeChannel::gist: return kGistDim;
    case NativeChannel::saliency: return kSaliencyDim;
  }
  return 0;
}

FeatureVector extract_native(const ImageRgb& img, NativeChannel channel) {
  switch (channel) {
    case NativeChannel::lab_hist:
      return lab_histogram(srgb_to_cielab(resize(img, 256, 256)));
    case NativeChannel::gist:
      return color_gist(img);
    case NativeChannel::saliency:
      return gbvs_saliency(img);
  }
  throw_internal("unreachable channel kind");
}

ExtractResult extract_channel(const Manifest& manifest, NativeChannel channel) {
  ExtractResult result;
  result.channel.name = native_channel_name(channel);
  result.channel.dim = native_channel_dim(channel);
  for (const ImageRecord& record : manifest.records) {
    try {
      ImageRgb img = load_image(record.path);
      FeatureVector fv = extract_native(img, channel);
      result.channel.vectors.emplace(record.id, std::move(fv.values));
    } catch (const Error& e) {
      result.failures.push_back({record.id, e.what()});
    }
  }
  return result;
}

namespace {

constexpr char kFvecMagic[5] = {'F', 'V', 'E', 'C', '1'};

void put_u32le(std::ostream& out, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_u64le(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t get_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

std::uint64_t get_u64le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_feature_file(const FeatureChannel& channel,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write feature file: " + path);
  out.write(kFvecMagic, 5);
  put_u32le(out, static_cast<std::uint32_t>(channel.dim));
  put_u64le(out, channel.vectors.size());
  std::ofstream idx(path + ".idx", std::ios::binary);
  if (!idx) throw_data("cannot write feature index: " + path + ".idx");
  std::uint64_t row = 0;
  for (const auto& [id, values] : channel.vectors) {
    if (static_cast<int>(values.size()) != channel.dim) {
      throw_data("vector for id \"" + id + "\" has dim " +
                 std::to_string(values.size()) + ", channel declares " +
                 std::to_string(channel.dim));
    }
    for (double v : values) {
      float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32le(out, bits);
    }
    json j;
    j["row"] = row;
    j["id"] = id;
    idx << j.dump() << "\n";
    ++row;
  }
  if (!out || !idx) throw_data("write failed: " + path);
}

FeatureChannel load_feature_file(const std::string& path,
                                 const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open feature file: " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kFvecMagic, 5) != 0) {
    throw_data("bad magic in feature file: " + path);
  }
  std::uint32_t dim = get_u32le(in);
  std::uint64_t rows = get_u64le(in);
  if (!in || dim == 0) throw_data("bad header in feature file: " + path);

  // Sidecar index maps rows to ids.
  std::ifstream idx(path + ".idx");
  if (!idx) throw_data("cannot open feature index: " + path + ".idx");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("row") || !j.contains("id")) {
      throw_data("malformed index line in " + path + ".idx");
    }
    std::uint64_t row = j["row"].get<std::uint64_t>();
    if (row != ids.size()) throw_data("index rows out of order in " + path + ".idx");
    ids.push_back(j["id"].get<std::string>());
  }
  if (ids.size() != rows) {
    throw_data("feature file declares " + std::to_string(rows) +
               " rows but index lists " + std::to_string(ids.size()));
  }

  FeatureChannel channel;
  channel.name = name;
  channel.dim = static_cast<int>(dim);
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::vector<double> values(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      std::uint32_t bits = get_u32le(in);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) {
        throw_data("non-finite value at row " + std::to_string(r) + " in " +
                   path);
      }
      values[d] = static_cast<double>(f);
    }
    if (!in) throw_data("truncated feature file: " + path);
    if (!channel.vectors.emplace(ids[r], std::move(values)).second) {
      throw_data("duplicate id \"" + ids[r] + "\" in " + path + ".idx");
    }
  }
  return channel;
}

}  // namespace stylerec
