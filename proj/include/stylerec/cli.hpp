#ifndef STYLEREC_CLI_HPP_
#define STYLEREC_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylerec/data.hpp"
#include "stylerec/fusion.hpp"
#include "stylerec/learner.hpp"

namespace stylerec {

// Command implementations shared by the binary and the test suites. Every
// command is deterministic given its options; failures surface as Error
// (usage -> exit 1, data -> 2, internal -> 3).

struct ExtractOptions {
  std::string manifest_path;
  std::string channel;  // lab_hist | gist | saliency
  std::string out_path;
};

// Writes <out_path> (FVEC1) plus the <out_path>.idx sidecar; reports the
// channel dimension and per-image failures on the log stream.
void cmd_extract(const ExtractOptions& options, std::ostream& log);

struct TrainOptions {
  std::string manifest_path;
  // channel name -> feature file path.
  std::vector<std::pair<std::string, std::string>> features;
  std::string mode = "single";  // single | fusion | fusion_x_content
  std::string content_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::string losses = "both";  // both | hinge | logistic
  int epochs = 10;
  double eta0 = 0.5;
};

void cmd_train(const TrainOptions& options, std::ostream& log);

struct EvaluateOptions {
  std::string manifest_path;
  std::vector<std::pair<std::string, std::string>> features;
  std::string models_dir;
  std::string content_path;  // enables the correlation block when set
  std::string out_dir;
  std::vector<std::string> formats = {"json"};
  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::size_t ap_per_class = 0;
};

void cmd_evaluate(const EvaluateOptions& options, std::ostream& log);

struct SearchOptions {
  std::string manifest_path;
  std::vector<std::pair<std::string, std::string>> features;
  std::string models_dir;
  std::string content_path;
  std::string style;
  std::string text;  // case-insensitive caption substring; empty = no filter
  int top_k = 5;
  std::optional<double> min_score;
  std::string out_path;
  std::string html_path;
};

void cmd_search(const SearchOptions& options, std::ostream& log);

struct CrossRankOptions {
  std::string manifest_path;  // the foreign corpus
  std::vector<std::pair<std::string, std::string>> features;
  std::string models_dir;
  int top_k = 5;
  std::string out_path;
  std::string html_path;
};

void cmd_cross_rank(const CrossRankOptions& options, std::ostream& log);

// On-disk model bundle: bundle.json names the mode, channels, classes and
// the per-class model files living beside it.
struct ModelBundle {
  std::string mode;  // single | fusion | fusion_x_content
  std::vector<std::string> channel_names;
  std::vector<std::string> classes;
  std::vector<MultiModel> stage1;  // one per channel
  std::optional<MultiModel> stage2;
};

ModelBundle load_bundle(const std::string& dir);

}  // namespace stylerec

#endif  // STYLEREC_CLI_HPP_
