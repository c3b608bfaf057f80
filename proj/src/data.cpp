#include "stylerec/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "json.hpp"
#include "stylerec/error.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  if (name == "unassigned") return Split::unassigned;
  throw_data("unknown split name: " + name);
}

bool ImageRecord::has_label(const std::string& cls) const {
  return std::find(labels.begin(), labels.end(), cls) != labels.end();
}

int Manifest::class_index(const std::string& cls) const {
  auto it = std::find(classes.begin(), classes.end(), cls);
  if (it == classes.end()) return -1;
  return static_cast<int>(it - classes.begin());
}

std::vector<const ImageRecord*> Manifest::records_in(Split split) const {
  std::vector<const ImageRecord*> out;
  for (const ImageRecord& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

namespace {

json parse_json_line(const std::string& line, const std::string& origin,
                     std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw_data(origin + ":" + std::to_string(line_no) +
               ": malformed manifest line");
  }
  return j;
}

void validate_manifest(const Manifest& m, const std::string& origin) {
  if (m.classes.empty()) {
    throw_data(origin + ": manifest declares no classes");
  }
  std::set<std::string> class_set(m.classes.begin(), m.classes.end());
  if (class_set.size() != m.classes.size()) {
    throw_data(origin + ": duplicate class name in manifest header");
  }
  std::set<std::string> seen_ids;
  for (const ImageRecord& r : m.records) {
    if (!seen_ids.insert(r.id).second) {
      throw_data(origin + ": duplicate record id \"" + r.id + "\"");
    }
    for (const std::string& label : r.labels) {
      if (class_set.find(label) == class_set.end()) {
        throw_data(origin + ": record \"" + r.id + "\" has label \"" + label +
                   "\" not in the class vocabulary");
      }
    }
  }
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::string& origin) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_json_line(line, origin, line_no);
    if (!have_header) {
      if (!j.contains("classes") || !j["classes"].is_array()) {
        throw_data(origin + ": first line must carry a \"classes\" array");
      }
      for (const auto& c : j["classes"]) {
        m.classes.push_back(c.get<std::string>());
      }
      m.source = j.value("source", "");
      have_header = true;
      continue;
    }
    ImageRecord r;
    if (!j.contains("id") || !j.contains("path")) {
      throw_data(origin + ":" + std::to_string(line_no) +
                 ": record needs \"id\" and \"path\"");
    }
    r.id = j["id"].get<std::string>();
    r.path = j["path"].get<std::string>();
    if (j.contains("labels")) {
      for (const auto& l : j["labels"]) r.labels.push_back(l.get<std::string>());
    }
    r.caption = j.value("caption", "");
    if (j.contains("split")) {
      r.split = split_from_name(j["split"].get<std::string>());
    }
    m.records.push_back(std::move(r));
  }
  if (!have_header) {
    throw_data(origin + ": empty manifest file");
  }
  validate_manifest(m, origin);
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open manifest: " + path);
  return parse_manifest(in, path);
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write manifest: " + path);
  json header;
  header["classes"] = manifest.classes;
  header["source"] = manifest.source;
  out << header.dump() << "\n";
  for (const ImageRecord& r : manifest.records) {
    json j;
    j["id"] = r.id;
    j["path"] = r.path;
    j["labels"] = r.labels;
    if (!r.caption.empty()) j["caption"] = r.caption;
    if (r.split != Split::unassigned) j["split"] = split_name(r.split);
    out << j.dump() << "\n";
  }
  if (!out) throw_data("write failed: " + path);
}

namespace {

// Largest-remainder quotas: exact total, each count within one of n*f.
std::array<std::size_t, 3> stratum_quotas(std::size_t n,
                                          const SplitFractions& f) {
  const double fracs[3] = {f.train, f.val, f.test};
  std::array<std::size_t, 3> base{};
  double rem[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double target = static_cast<double>(n) * fracs[i];
    base[i] = static_cast<std::size_t>(std::floor(target));
    rem[i] = target - std::floor(target);
    assigned += base[i];
  }
  std::size_t leftover = n - assigned;
  // Distribute leftovers to the largest remainders; ties favor train < val < test.
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; k < leftover; ++k) base[order[k % 3]] += 1;
  return base;
}

}  // namespace

Manifest split_dataset(const Manifest& manifest, std::uint64_t seed,
                       const SplitFractions& fractions) {
  if (manifest.records.empty()) throw_data("cannot split an empty manifest");
  if (fractions.train <= 0 || fractions.val <= 0 || fractions.test <= 0) {
    throw_data("split fractions must be positive");
  }
  double sum = fractions.train + fractions.val + fractions.test;
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw_data("split fractions must sum to 1");
  }

  Manifest out = manifest;
  // Stratum key: index of the first label in class order; -1 for unlabeled.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    int key = -1;
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
      if (out.records[i].has_label(out.classes[c])) {
        key = static_cast<int>(c);
        break;
      }
    }
    strata[key].push_back(i);
  }

  for (auto& [key, members] : strata) {
    (void)key;
    // Order inside the stratum by hash of (seed, id); the hash is a pure
    // function of the id so membership changes elsewhere cannot perturb it.
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) {
                       std::uint64_t ha = mix_seed(seed, out.records[a].id);
                       std::uint64_t hb = mix_seed(seed, out.records[b].id);
                       if (ha != hb) return ha < hb;
                       return out.records[a].id < out.records[b].id;
                     });
    auto quotas = stratum_quotas(members.size(), fractions);
    for (std::size_t i = 0; i < members.size(); ++i) {
      Split s;
      if (i < quotas[0]) {
        s = Split::train;
      } else if (i < quotas[0] + quotas[1]) {
        s = Split::val;
      } else {
        s = Split::test;
      }
      out.records[members[i]].split = s;
    }
  }
  return out;
}

std::vector<LabeledId> binarize_labels(const Manifest& manifest,
                                       const std::string& cls, Split split) {
  if (manifest.class_index(cls) < 0) {
    throw_data("unknown class: " + cls);
  }
  std::vector<LabeledId> out;
  for (const ImageRecord& r : manifest.records) {
    if (r.split != split) continue;
    out.push_back({r.id, r.has_label(cls) ? +1 : -1});
  }
  return out;
}

std::vector<LabeledId> balanced_subset(const std::vector<LabeledId>& pairs,
                                       std::uint64_t seed) {
  std::vector<LabeledId> pos, neg;
  for (const LabeledId& p : pairs) {
    (p.label > 0 ? pos : neg).push_back(p);
  }
  if (pos.empty() || neg.empty()) {
    throw_data("balanced_subset needs at least one positive and one negative");
  }
  auto by_id = [](const LabeledId& a, const LabeledId& b) {
    return a.id < b.id;
  };
  std::sort(pos.begin(), pos.end(), by_id);
  std::sort(neg.begin(), neg.end(), by_id);
  std::size_t k = std::min(pos.size(), neg.size());

  Rng rng(seed, "balanced_subset");
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<LabeledId> out;
  out.reserve(2 * k);
  out.insert(out.end(), pos.begin(), pos.begin() + k);
  out.insert(out.end(), neg.begin(), neg.begin() + k);
  std::sort(out.begin(), out.end(), by_id);
  return out;
}

}  // namespace stylerec
