#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stylerec/cli.hpp"
#include "stylerec/error.hpp"

namespace {

using stylerec::SplitFractions;

// "name=path" pairs for --features.
std::vector<std::pair<std::string, std::string>> parse_features(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& item : raw) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      stylerec::throw_usage("--features expects <name>=<file>, got \"" + item +
                            "\"");
    }
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

SplitFractions parse_fractions(const std::string& raw) {
  SplitFractions f;
  if (raw.empty()) return f;
  double train = 0, val = 0, test = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(raw);
  in >> train >> c1 >> val >> c2 >> test;
  if (!in || c1 != ',' || c2 != ',') {
    stylerec::throw_usage("--fractions expects train,val,test");
  }
  f.train = train;
  f.val = val;
  f.test = test;
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image style classification pipeline"};
  app.require_subcommand(1);
  // Presets come from key=value files with one [subcommand] section each;
  // command-line flags take precedence over file values.
  app.set_config("--config", "", "Config file with [subcommand] key=value presets");

  // extract
  auto* extract = app.add_subcommand("extract", "Compute a native feature channel");
  std::string ex_manifest, ex_channel, ex_out;
  extract->add_option("--manifest", ex_manifest, "Manifest file")->required();
  extract->add_option("--channel", ex_channel, "lab_hist | gist | saliency")
      ->required();
  extract->add_option("--out", ex_out, "Output feature file")->required();

  // train
  auto* train = app.add_subcommand("train", "Select hyperparameters and train models");
  std::string tr_manifest, tr_mode = "single", tr_content, tr_out, tr_losses = "both";
  std::string tr_fractions;
  std::vector<std::string> tr_features;
  std::uint64_t tr_seed = 0;
  int tr_epochs = 10;
  double tr_eta0 = 0.5;
  train->add_option("--manifest", tr_manifest, "Manifest file")->required();
  train->add_option("--features", tr_features, "Channel as <name>=<file>")
      ->required();
  train->add_option("--mode", tr_mode, "single | fusion | fusion_x_content");
  train->add_option("--content", tr_content, "Content-score file (JSONL)");
  train->add_option("--out", tr_out, "Output model directory")->required();
  train->add_option("--seed", tr_seed, "Seed for splits, training, evaluation");
  train->add_option("--fractions", tr_fractions, "train,val,test fractions");
  train->add_option("--losses", tr_losses, "both | hinge | logistic");
  train->add_option("--epochs", tr_epochs, "SGD epochs");
  train->add_option("--eta0", tr_eta0, "Initial learning rate");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model bundle on the test split");
  std::string ev_manifest, ev_models, ev_content, ev_out, ev_fractions;
  std::vector<std::string> ev_features;
  std::vector<std::string> ev_formats = {"json"};
  std::uint64_t ev_seed = 0;
  std::size_t ev_per_class = 0;
  evaluate->add_option("--manifest", ev_manifest, "Manifest file")->required();
  evaluate->add_option("--features", ev_features, "Channel as <name>=<file>");
  evaluate->add_option("--models", ev_models, "Model bundle directory")->required();
  evaluate->add_option("--content", ev_content, "Content-score file (JSONL)");
  evaluate->add_option("--out", ev_out, "Output report directory")->required();
  evaluate->add_option("--format", ev_formats, "json, csv, html");
  evaluate->add_option("--seed", ev_seed, "Evaluation seed");
  evaluate->add_option("--fractions", ev_fractions, "train,val,test fractions");
  evaluate->add_option("--ap-per-class", ev_per_class,
                       "Records per class in the AP pools (0 = max)");

  // search
  auto* search = app.add_subcommand("search", "Caption search filtered by style score");
  std::string se_manifest, se_models, se_content, se_style, se_text, se_out, se_html;
  std::vector<std::string> se_features;
  int se_top_k = 5;
  double se_min_score = 0.0;
  bool se_has_min = false;
  search->add_option("--manifest", se_manifest, "Corpus manifest")->required();
  search->add_option("--features", se_features, "Channel as <name>=<file>");
  search->add_option("--models", se_models, "Model bundle directory")->required();
  search->add_option("--content", se_content, "Content-score file (JSONL)");
  search->add_option("--style", se_style, "Style class to rank by")->required();
  search->add_option("--text", se_text, "Caption substring filter");
  search->add_option("--top-k", se_top_k, "Results to keep");
  auto* min_opt = search->add_option("--min-score", se_min_score,
                                     "Drop results scoring below this");
  search->add_option("--out", se_out, "Output JSON file")->required();
  search->add_option("--html", se_html, "Optional HTML gallery");

  // cross-rank
  auto* cross = app.add_subcommand("cross-rank",
                                   "Rank a foreign corpus by every learned style");
  std::string cr_manifest, cr_models, cr_out, cr_html;
  std::vector<std::string> cr_features;
  int cr_top_k = 5;
  cross->add_option("--manifest", cr_manifest, "Foreign corpus manifest")->required();
  cross->add_option("--features", cr_features, "Channel as <name>=<file>");
  cross->add_option("--models", cr_models, "Model bundle directory")->required();
  cross->add_option("--top-k", cr_top_k, "Results per style");
  cross->add_option("--out", cr_out, "Output JSON file")->required();
  cross->add_option("--html", cr_html, "Optional HTML gallery");

  try {
    app.parse(argc, argv);
    se_has_min = min_opt->count() > 0;

    if (extract->parsed()) {
      stylerec::cmd_extract({ex_manifest, ex_channel, ex_out}, std::cout);
    } else if (train->parsed()) {
      stylerec::TrainOptions options;
      options.manifest_path = tr_manifest;
      options.features = parse_features(tr_features);
      options.mode = tr_mode;
      options.content_path = tr_content;
      options.out_dir = tr_out;
      options.seed = tr_seed;
      options.fractions = parse_fractions(tr_fractions);
      options.losses = tr_losses;
      options.epochs = tr_epochs;
      options.eta0 = tr_eta0;
      stylerec::cmd_train(options, std::cout);
    } else if (evaluate->parsed()) {
      stylerec::EvaluateOptions options;
      options.manifest_path = ev_manifest;
      options.features = parse_features(ev_features);
      options.models_dir = ev_models;
      options.content_path = ev_content;
      options.out_dir = ev_out;
      options.formats = ev_formats;
      options.seed = ev_seed;
      options.fractions = parse_fractions(ev_fractions);
      options.ap_per_class = ev_per_class;
      stylerec::cmd_evaluate(options, std::cout);
    } else if (search->parsed()) {
      stylerec::SearchOptions options;
      options.manifest_path = se_manifest;
      options.features = parse_features(se_features);
      options.models_dir = se_models;
      options.content_path = se_content;
      options.style = se_style;
      options.text = se_text;
      options.top_k = se_top_k;
      if (se_has_min) options.min_score = se_min_score;
      options.out_path = se_out;
      options.html_path = se_html;
      stylerec::cmd_search(options, std::cout);
    } else if (cross->parsed()) {
      stylerec::CrossRankOptions options;
      options.manifest_path = cr_manifest;
      options.features = parse_features(cr_features);
      options.models_dir = cr_models;
      options.top_k = cr_top_k;
      options.out_path = cr_out;
      options.html_path = cr_html;
      stylerec::cmd_cross_rank(options, std::cout);
    }
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const stylerec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case stylerec::ErrorKind::usage: return 1;
      case stylerec::ErrorKind::data: return 2;
      case stylerec::ErrorKind::internal: return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
