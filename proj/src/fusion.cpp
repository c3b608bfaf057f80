#include "stylerec/fusion.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "stylerec/error.hpp"

namespace stylerec {

using nlohmann::json;

const std::array<std::string, 4>& content_group_names() {
  static const std::array<std::string, 4> names = {
      "animals", "vehicles", "indoor_objects", "people"};
  return names;
}

const std::map<std::string, int>& voc_group_map() {
  static const std::map<std::string, int> groups = {
      {"bird", 0},        {"cat", 0},       {"cow", 0},
      {"dog", 0},         {"horse", 0},     {"sheep", 0},
      {"aeroplane", 1},   {"bicycle", 1},   {"boat", 1},
      {"bus", 1},         {"car", 1},       {"motorbike", 1},
      {"train", 1},       {"bottle", 2},    {"chair", 2},
      {"diningtable", 2}, {"pottedplant", 2}, {"sofa", 2},
      {"tvmonitor", 2},   {"person", 3},
  };
  return groups;
}

std::vector<ScoreVector> stage1_scores(
    const std::vector<const MultiModel*>& models,
    const std::vector<const FeatureChannel*>& channels,
    const std::vector<std::string>& ids) {
  if (models.empty() || models.size() != channels.size()) {
    throw_data("stage1_scores: one model stack per channel is required");
  }
  std::vector<std::string> classes = models[0]->class_names();
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i]->channel != channels[i]->name) {
      throw_data("model stack for channel \"" + models[i]->channel +
                 "\" paired with channel \"" + channels[i]->name + "\"");
    }
    if (models[i]->class_names() != classes) {
      throw_data("stage-1 model stacks disagree on the class list");
    }
  }

  std::vector<ScoreVector> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    ScoreVector sv;
    sv.id = id;
    sv.scores.reserve(models.size() * classes.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
      const std::vector<double>& x = channels[i]->vector_for(id);
      for (const LinearModel& m : models[i]->models) {
        sv.scores.push_back(predict_score(m, x));
      }
    }
    out.push_back(std::move(sv));
  }
  return out;
}

std::map<std::string, ContentScores> parse_content_scores(
    std::istream& in, const std::string& origin,
    const std::map<std::string, int>& aggregation) {
  std::map<std::string, ContentScores> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("scores") ||
        !j["scores"].is_object()) {
      throw_data(origin + ":" + std::to_string(line_no) +
                 ": malformed content-score line");
    }
    ContentScores cs;
    cs.id = j["id"].get<std::string>();
    cs.scores = {0.0, 0.0, 0.0, 0.0};
    std::size_t seen = 0;
    for (const auto& [cls, value] : j["scores"].items()) {
      auto it = aggregation.find(cls);
      if (it == aggregation.end()) {
        throw_data(origin + ":" + std::to_string(line_no) +
                   ": unknown content class \"" + cls + "\"");
      }
      double v = value.get<double>();
      cs.scores[it->second] = std::max(cs.scores[it->second], v);
      ++seen;
    }
    if (seen != aggregation.size()) {
      throw_data(origin + ":" + std::to_string(line_no) + ": expected " +
                 std::to_string(aggregation.size()) +
                 " content classes, found " + std::to_string(seen));
    }
    for (double& v : cs.scores) v = std::clamp(v, 0.0, 1.0);
    if (!out.emplace(cs.id, cs).second) {
      throw_data(origin + ":" + std::to_string(line_no) + ": duplicate id \"" +
                 cs.id + "\"");
    }
  }
  return out;
}

std::map<std::string, ContentScores> load_content_scores(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open content scores: " + path);
  return parse_content_scores(in, path, voc_group_map());
}

std::vector<double> outer_product_expand(const std::vector<double>& fused,
                                         const ContentScores& content) {
  std::vector<double> out;
  out.reserve(fused.size() * 5);
  out.insert(out.end(), fused.begin(), fused.end());
  for (double c : content.scores) {
    for (double f : fused) out.push_back(c * f);
  }
  return out;
}

const char* fusion_mode_name(FusionMode mode) {
  return mode == FusionMode::fusion ? "fusion" : "fusion_x_content";
}

FeatureChannel build_fused_channel(
    const std::vector<const MultiModel*>& stage1,
    const std::vector<const FeatureChannel*>& channels,
    const std::vector<std::string>& ids, FusionMode mode,
    const std::map<std::string, ContentScores>* content) {
  if (mode == FusionMode::fusion_x_content && content == nullptr) {
    throw_usage("fusion_x_content requires content scores");
  }
  std::vector<ScoreVector> scores = stage1_scores(stage1, channels, ids);
  FeatureChannel out;
  out.name = fusion_mode_name(mode);
  for (ScoreVector& sv : scores) {
    std::vector<double> values = std::move(sv.scores);
    if (mode == FusionMode::fusion_x_content) {
      auto it = content->find(sv.id);
      if (it == content->end()) {
        throw_data("content scores do not cover id \"" + sv.id + "\"");
      }
      values = outer_product_expand(values, it->second);
    }
    out.dim = static_cast<int>(values.size());
    out.vectors.emplace(sv.id, std::move(values));
  }
  return out;
}

FusionModel train_fusion(const Manifest& manifest,
                         const std::vector<const MultiModel*>& stage1,
                         const std::vector<const FeatureChannel*>& channels,
                         FusionMode mode, const Hyperparams& h,
                         const std::map<std::string, ContentScores>* content) {
  for (const MultiModel* m : stage1) {
    if (m->trained_split != "train") {
      throw_data("stage-1 models for channel \"" + m->channel +
                 "\" were trained on split \"" + m->trained_split +
                 "\"; refusing to fuse across the train/eval boundary");
    }
  }
  std::vector<std::string> train_ids;
  for (const ImageRecord& r : manifest.records) {
    if (r.split == Split::train) train_ids.push_back(r.id);
  }
  if (train_ids.empty()) throw_data("train split is empty");

  FeatureChannel fused =
      build_fused_channel(stage1, channels, train_ids, mode, content);
  FusionModel model;
  model.mode = mode;
  model.stage2 = train_one_vs_all(manifest, fused, h);
  return model;
}

}  // namespace stylerec
