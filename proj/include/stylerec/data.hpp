#ifndef STYLEREC_DATA_HPP_
#define STYLEREC_DATA_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stylerec {

enum class Split { train, val, test, unassigned };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ImageRecord {
  std::string id;
  std::string path;
  std::vector<std::string> labels;  // subset of the manifest class vocabulary
  std::string caption;              // optional, used by the search command
  Split split = Split::unassigned;

  bool has_label(const std::string& cls) const;
};

// Dataset manifest: an ordered class vocabulary plus one record per image.
// Serialized as JSON Lines, first line {"classes": [...], "source": "..."},
// then {"id": ..., "path": ..., "labels": [...], "caption"?, "split"?}.
struct Manifest {
  std::vector<std::string> classes;
  std::vector<ImageRecord> records;
  std::string source;

  int class_index(const std::string& cls) const;  // -1 when absent
  std::vector<const ImageRecord*> records_in(Split split) const;
};

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

Manifest load_manifest(const std::string& path);
Manifest parse_manifest(std::istream& in, const std::string& origin);
void save_manifest(const Manifest& manifest, const std::string& path);

// Deterministic stratified split. Records are stratified by their first
// label in class order (unlabeled records form their own stratum), ordered
// inside each stratum by a stable hash of (seed, id), and assigned
// largest-remainder quotas so per-stratum counts sit within one of the
// fraction targets.
Manifest split_dataset(const Manifest& manifest, std::uint64_t seed,
                       const SplitFractions& fractions);

struct LabeledId {
  std::string id;
  int label = 0;  // +1 or -1
};

// +1 when the class is among the record's labels, -1 otherwise; covers
// exactly the selected split in manifest record order.
std::vector<LabeledId> binarize_labels(const Manifest& manifest,
                                       const std::string& cls, Split split);

// Equal positive and negative counts (the minority count of each), chosen by
// the seeded generator; output sorted by id.
std::vector<LabeledId> balanced_subset(const std::vector<LabeledId>& pairs,
                                       std::uint64_t seed);

}  // namespace stylerec

#endif  // STYLEREC_DATA_HPP_
