#ifndef STYLEREC_FUSION_HPP_
#define STYLEREC_FUSION_HPP_

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stylerec/learner.hpp"

namespace stylerec {

// Stage-1 decision values of every (channel, class) pair for one record,
// channel-major then class-minor.
struct ScoreVector {
  std::string id;
  std::vector<double> scores;
};

// Aggregate content-classifier confidences: animals, vehicles, indoor
// objects, people, each in [0, 1].
struct ContentScores {
  std::string id;
  std::array<double, 4> scores{};
};

const std::array<std::string, 4>& content_group_names();

// VOC-2010 class list mapped onto the four aggregate groups.
const std::map<std::string, int>& voc_group_map();

// Materializes stage-1 outputs. models[i] scores channels[i]; all models
// must share one class list and every id must be present in every channel.
std::vector<ScoreVector> stage1_scores(
    const std::vector<const MultiModel*>& models,
    const std::vector<const FeatureChannel*>& channels,
    const std::vector<std::string>& ids);

// Content-score files are JSON Lines of {"id": ..., "scores": {<all 20 VOC
// classes>: value}}. A group's score is the maximum over its member classes,
// clipped into [0, 1].
std::map<std::string, ContentScores> load_content_scores(const std::string& path);
std::map<std::string, ContentScores> parse_content_scores(
    std::istream& in, const std::string& origin,
    const std::map<std::string, int>& aggregation);

// [fused | c1*fused | c2*fused | c3*fused | c4*fused]; output dimension is
// exactly five times the input's.
std::vector<double> outer_product_expand(const std::vector<double>& fused,
                                         const ContentScores& content);

enum class FusionMode { fusion, fusion_x_content };

const char* fusion_mode_name(FusionMode mode);

struct FusionModel {
  FusionMode mode = FusionMode::fusion;
  MultiModel stage2;
};

// In-memory channel of stage-1 score vectors (content-expanded when the
// mode asks for it), ready for stage-2 training or scoring.
FeatureChannel build_fused_channel(
    const std::vector<const MultiModel*>& stage1,
    const std::vector<const FeatureChannel*>& channels,
    const std::vector<std::string>& ids, FusionMode mode,
    const std::map<std::string, ContentScores>* content);

// Trains the stage-2 one-vs-all stack on the train split's score vectors.
// Refuses stage-1 models whose provenance is not the train split.
FusionModel train_fusion(const Manifest& manifest,
                         const std::vector<const MultiModel*>& stage1,
                         const std::vector<const FeatureChannel*>& channels,
                         FusionMode mode, const Hyperparams& h,
                         const std::map<std::string, ContentScores>* content);

}  // namespace stylerec

#endif  // STYLEREC_FUSION_HPP_
