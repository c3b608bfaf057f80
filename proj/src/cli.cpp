#include "stylerec/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stylerec/error.hpp"
#include "stylerec/eval.hpp"
#include "stylerec/features.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write: " + path);
  out << text;
  if (!out) throw_data("write failed: " + path);
}

// Uses the record splits stored in the manifest when every record carries
// one; derives the seeded stratified split otherwise.
Manifest manifest_with_splits(const std::string& path, std::uint64_t seed,
                              const SplitFractions& fractions) {
  Manifest m = load_manifest(path);
  bool all_assigned = !m.records.empty();
  for (const ImageRecord& r : m.records) {
    if (r.split == Split::unassigned) {
      all_assigned = false;
      break;
    }
  }
  if (all_assigned) return m;
  return split_dataset(m, mix_seed(seed, "split"), fractions);
}

std::string slugify(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  }
  return out;
}

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_native_channel(const std::string& name) {
  return name == "lab_hist" || name == "gist" || name == "saliency";
}

// Loads the feature files given on the command line; native channels that
// were not provided are extracted from the manifest's image files.
std::map<std::string, FeatureChannel> resolve_channels(
    const std::vector<std::string>& needed,
    const std::vector<std::pair<std::string, std::string>>& provided,
    const Manifest& manifest, std::ostream& log) {
  std::map<std::string, FeatureChannel> out;
  std::map<std::string, std::string> paths(provided.begin(), provided.end());
  for (const std::string& name : needed) {
    auto it = paths.find(name);
    if (it != paths.end()) {
      out.emplace(name, load_feature_file(it->second, name));
    } else if (is_native_channel(name)) {
      log << "extracting channel " << name << " from manifest images\n";
      ExtractResult r =
          extract_channel(manifest, native_channel_from_name(name));
      for (const ExtractFailure& f : r.failures) {
        log << "  failed: " << f.id << ": " << f.message << "\n";
      }
      out.emplace(name, std::move(r.channel));
    } else {
      throw_usage("channel \"" + name +
                  "\" is not native; provide it with --features " + name +
                  "=<file>");
    }
  }
  return out;
}

std::vector<std::string> split_ids(const Manifest& manifest,
                                   std::initializer_list<Split> splits) {
  std::vector<std::string> ids;
  for (const ImageRecord& r : manifest.records) {
    for (Split s : splits) {
      if (r.split == s) {
        ids.push_back(r.id);
        break;
      }
    }
  }
  return ids;
}

json hyperparams_json(const Hyperparams& h) {
  return json{{"lambda1", h.lambda1}, {"lambda2", h.lambda2},
              {"loss", loss_name(h.loss)}, {"eta0", h.eta0},
              {"epochs", h.epochs}, {"seed", h.seed}};
}

json selection_json(const SelectionResult& selection) {
  json rows = json::array();
  for (const GridEntry& e : selection.table) {
    json row = hyperparams_json(e.config);
    if (e.failed) {
      row["failed"] = true;
      row["error"] = e.error;
    } else {
      row["mean_ap"] = e.mean_ap;
    }
    rows.push_back(row);
  }
  return json{{"rows", rows}, {"chosen", hyperparams_json(selection.best)}};
}

void save_multi_model(const MultiModel& multi, const std::string& dir,
                      const std::string& prefix, json& files_out) {
  for (std::size_t i = 0; i < multi.models.size(); ++i) {
    const LinearModel& m = multi.models[i];
    std::string file =
        prefix + "_" + std::to_string(i) + "_" + slugify(m.class_name) + ".smdl";
    save_model(m, (fs::path(dir) / file).string(), multi.trained_split);
    files_out[m.class_name] = file;
  }
}

MultiModel load_multi_model(const std::string& dir, const json& files,
                            const std::string& channel,
                            const std::vector<std::string>& classes) {
  MultiModel multi;
  multi.channel = channel;
  for (const std::string& cls : classes) {
    if (!files.contains(cls)) {
      throw_data("bundle lists no model file for class \"" + cls + "\"");
    }
    std::string split;
    LinearModel m = load_model(
        (fs::path(dir) / files.at(cls).get<std::string>()).string(), &split);
    if (multi.models.empty()) {
      multi.trained_split = split;
    } else if (multi.trained_split != split) {
      throw_data("bundle mixes models from different training splits");
    }
    multi.models.push_back(std::move(m));
  }
  return multi;
}

FusionMode fusion_mode_from_string(const std::string& mode) {
  if (mode == "fusion") return FusionMode::fusion;
  if (mode == "fusion_x_content") return FusionMode::fusion_x_content;
  throw_usage("unknown mode: " + mode);
}

}  // namespace

void cmd_extract(const ExtractOptions& options, std::ostream& log) {
  Manifest manifest = load_manifest(options.manifest_path);
  if (manifest.records.empty()) {
    throw_data("manifest has no records to extract");
  }
  NativeChannel channel = native_channel_from_name(options.channel);
  ExtractResult result = extract_channel(manifest, channel);
  if (result.channel.vectors.empty()) {
    throw_data("no image could be extracted");
  }
  write_feature_file(result.channel, options.out_path);
  log << "channel " << options.channel << " dim " << result.channel.dim
      << ", " << result.channel.vectors.size() << " vectors, "
      << result.failures.size() << " failures\n";
  for (const ExtractFailure& f : result.failures) {
    log << "  failed: " << f.id << ": " << f.message << "\n";
  }
}

void cmd_train(const TrainOptions& options, std::ostream& log) {
  if (options.mode != "single" && options.mode != "fusion" &&
      options.mode != "fusion_x_content") {
    throw_usage("unknown mode: " + options.mode);
  }
  if (options.features.empty()) {
    throw_usage("at least one --features <name>=<file> is required");
  }
  if (options.mode == "single" && options.features.size() != 1) {
    throw_usage("mode single takes exactly one feature channel");
  }
  if (options.mode == "fusion_x_content" && options.content_path.empty()) {
    throw_usage("mode fusion_x_content requires --content <file>");
  }

  Manifest manifest = manifest_with_splits(options.manifest_path, options.seed,
                                           options.fractions);
  std::vector<std::string> channel_names;
  for (const auto& [name, path] : options.features) {
    if (std::find(channel_names.begin(), channel_names.end(), name) !=
        channel_names.end()) {
      throw_usage("channel \"" + name + "\" given more than once");
    }
    channel_names.push_back(name);
  }
  std::map<std::string, FeatureChannel> channels =
      resolve_channels(channel_names, options.features, manifest, log);

  fs::create_directories(options.out_dir);

  std::vector<Hyperparams> grid = default_grid(
      options.losses == "logistic" ? LossKind::logistic : LossKind::hinge,
      options.losses == "both", options.epochs,
      mix_seed(options.seed, "train"));
  for (Hyperparams& h : grid) h.eta0 = options.eta0;

  json bundle;
  bundle["magic"] = "SBNDL1";
  bundle["mode"] = options.mode;
  bundle["channels"] = channel_names;
  bundle["classes"] = manifest.classes;
  json validation;

  std::vector<MultiModel> stage1;
  for (const std::string& name : channel_names) {
    const FeatureChannel& channel = channels.at(name);
    log << "selecting hyperparameters for channel " << name << " ("
        << grid.size() << " configs)\n";
    SelectionResult selection = select_hyperparams(
        grid, manifest, channel, mix_seed(options.seed, "val"));
    validation[name] = selection_json(selection);
    log << "  chosen: lambda1 " << selection.best.lambda1 << ", lambda2 "
        << selection.best.lambda2 << ", loss "
        << loss_name(selection.best.loss) << "\n";
    MultiModel multi = train_one_vs_all(manifest, channel, selection.best);
    json files;
    save_multi_model(multi, options.out_dir, "s1_" + slugify(name), files);
    bundle["stage1"][name] = files;
    stage1.push_back(std::move(multi));
  }

  if (options.mode != "single") {
    FusionMode mode = fusion_mode_from_string(options.mode);
    std::map<std::string, ContentScores> content;
    if (mode == FusionMode::fusion_x_content) {
      content = load_content_scores(options.content_path);
    }
    std::vector<const MultiModel*> stage1_ptrs;
    std::vector<const FeatureChannel*> channel_ptrs;
    for (std::size_t i = 0; i < channel_names.size(); ++i) {
      stage1_ptrs.push_back(&stage1[i]);
      channel_ptrs.push_back(&channels.at(channel_names[i]));
    }
    FeatureChannel fused = build_fused_channel(
        stage1_ptrs, channel_ptrs,
        split_ids(manifest, {Split::train, Split::val}), mode,
        content.empty() ? nullptr : &content);
    log << "selecting hyperparameters for stage-2 (" << fused.name
        << ", dim " << fused.dim << ")\n";
    SelectionResult selection = select_hyperparams(
        grid, manifest, fused, mix_seed(options.seed, "val-stage2"));
    validation["stage2"] = selection_json(selection);
    FusionModel fusion =
        train_fusion(manifest, stage1_ptrs, channel_ptrs, mode, selection.best,
                     content.empty() ? nullptr : &content);
    json files;
    save_multi_model(fusion.stage2, options.out_dir, "s2", files);
    bundle["stage2"] = files;
  }

  write_text_file((fs::path(options.out_dir) / "bundle.json").string(),
                  bundle.dump(2) + "\n");
  write_text_file((fs::path(options.out_dir) / "validation_table.json").string(),
                  validation.dump(2) + "\n");
  log << "wrote models to " << options.out_dir << "\n";
}

ModelBundle load_bundle(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "bundle.json");
  if (!in) throw_data("cannot open bundle.json in " + dir);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("magic", "") != std::string("SBNDL1")) {
    throw_data("not a model bundle: " + dir);
  }
  ModelBundle bundle;
  bundle.mode = j.at("mode").get<std::string>();
  bundle.channel_names = j.at("channels").get<std::vector<std::string>>();
  bundle.classes = j.at("classes").get<std::vector<std::string>>();
  for (const std::string& name : bundle.channel_names) {
    bundle.stage1.push_back(
        load_multi_model(dir, j.at("stage1").at(name), name, bundle.classes));
  }
  if (j.contains("stage2")) {
    MultiModel stage2 = load_multi_model(
        dir, j.at("stage2"),
        bundle.mode == "fusion_x_content" ? "fusion_x_content" : "fusion",
        bundle.classes);
    bundle.stage2 = std::move(stage2);
  }
  return bundle;
}

namespace {

// Assembles the scoring stack for a bundle over a fixed id set. For fusion
// bundles the fused channel is materialized once up front.
struct Scorer {
  ModelBundle bundle;
  std::map<std::string, FeatureChannel> channels;
  FeatureChannel fused;

  double operator()(const std::string& cls, const std::string& id) const {
    if (bundle.stage2) {
      return predict_score(bundle.stage2->model_for(cls),
                           fused.vector_for(id));
    }
    const MultiModel& multi = bundle.stage1.at(0);
    return predict_score(multi.model_for(cls),
                         channels.at(multi.channel).vector_for(id));
  }
};

Scorer make_scorer(ModelBundle bundle,
                   std::map<std::string, FeatureChannel> channels,
                   const std::vector<std::string>& ids,
                   const std::map<std::string, ContentScores>* content) {
  Scorer scorer;
  scorer.bundle = std::move(bundle);
  scorer.channels = std::move(channels);
  if (scorer.bundle.stage2) {
    std::vector<const MultiModel*> stage1_ptrs;
    std::vector<const FeatureChannel*> channel_ptrs;
    for (const MultiModel& m : scorer.bundle.stage1) {
      stage1_ptrs.push_back(&m);
      channel_ptrs.push_back(&scorer.channels.at(m.channel));
    }
    scorer.fused = build_fused_channel(
        stage1_ptrs, channel_ptrs, ids,
        fusion_mode_from_string(scorer.bundle.mode), content);
  }
  return scorer;
}

}  // namespace

void cmd_evaluate(const EvaluateOptions& options, std::ostream& log) {
  Manifest manifest = manifest_with_splits(options.manifest_path, options.seed,
                                           options.fractions);
  ModelBundle bundle = load_bundle(options.models_dir);
  std::map<std::string, FeatureChannel> channels = resolve_channels(
      bundle.channel_names, options.features, manifest, log);

  std::map<std::string, ContentScores> content;
  if (!options.content_path.empty()) {
    content = load_content_scores(options.content_path);
  }
  if (bundle.mode == "fusion_x_content" && content.empty()) {
    throw_usage("this bundle needs --content <file>");
  }

  std::vector<std::string> ids =
      split_ids(manifest, {Split::val, Split::test});
  Scorer scorer = make_scorer(std::move(bundle), std::move(channels), ids,
                              content.empty() ? nullptr : &content);

  ReportOptions report_options;
  report_options.seed = options.seed;
  report_options.ap_per_class = options.ap_per_class;
  EvalReport report = build_report(
      manifest,
      [&scorer](const std::string& cls, const std::string& id) {
        return scorer(cls, id);
      },
      report_options);

  if (!content.empty()) {
    std::vector<std::pair<std::string, std::map<std::string, double>>> series;
    for (std::size_t g = 0; g < content_group_names().size(); ++g) {
      std::map<std::string, double> values;
      for (const auto& [id, cs] : content) values[id] = cs.scores[g];
      series.emplace_back(content_group_names()[g], std::move(values));
    }
    report.correlation =
        content_style_correlation(series, manifest, Split::test);
  }

  fs::create_directories(options.out_dir);
  for (const std::string& format_name : options.formats) {
    ReportFormat format = report_format_from_name(format_name);
    std::string text = render_report(report, format);
    std::string file = "report." + format_name;
    write_text_file((fs::path(options.out_dir) / file).string(), text);
    log << "wrote " << file << "\n";
  }
  log << "mean AP " << report.mean_ap << ", mean accuracy "
      << report.mean_accuracy << "\n";
}

namespace {

struct RankedResult {
  std::string id;
  std::string path;
  std::string caption;
  double score = 0.0;
};

std::vector<RankedResult> rank_records(
    const std::vector<const ImageRecord*>& candidates, const Scorer& scorer,
    const std::string& style, int top_k, std::optional<double> min_score) {
  std::vector<RankedResult> ranked;
  ranked.reserve(candidates.size());
  for (const ImageRecord* r : candidates) {
    double s = scorer(style, r->id);
    if (min_score && s < *min_score) continue;
    ranked.push_back({r->id, r->path, r->caption, s});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedResult& a, const RankedResult& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  if (static_cast<int>(ranked.size()) > top_k) ranked.resize(top_k);
  return ranked;
}

json ranked_json(const std::vector<RankedResult>& ranked) {
  json out = json::array();
  for (const RankedResult& r : ranked) {
    json item;
    item["id"] = r.id;
    item["path"] = r.path;
    item["score"] = r.score;
    if (!r.caption.empty()) item["caption"] = r.caption;
    out.push_back(item);
  }
  return out;
}

std::string gallery_html(
    const std::vector<std::pair<std::string, std::vector<RankedResult>>>& rows) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
      << "<title>Style ranking</title>\n<style>\n"
      << "body{font-family:sans-serif;margin:2em;}\n"
      << ".row{margin-bottom:1.5em;}\n"
      << ".cell{display:inline-block;margin:4px;text-align:center;"
      << "vertical-align:top;}\n"
      << ".cell img{max-width:180px;max-height:180px;display:block;}\n"
      << ".score{font-size:11px;color:#444;}\n"
      << "</style></head><body>\n";
  for (const auto& [title, ranked] : rows) {
    out << "<div class=\"row\"><h2>";
    for (char c : title) {
      if (c == '<') out << "&lt;";
      else if (c == '&') out << "&amp;";
      else out << c;
    }
    out << "</h2>\n";
    for (const RankedResult& r : ranked) {
      out << "<span class=\"cell\"><img src=\"" << r.path << "\" alt=\"" << r.id
          << "\"><span class=\"score\">" << r.id << " "
          << json(r.score).dump() << "</span></span>\n";
    }
    out << "</div>\n";
  }
  out << "</body></html>\n";
  return out.str();
}

}  // namespace

void cmd_search(const SearchOptions& options, std::ostream& log) {
  if (options.style.empty()) throw_usage("--style is required");
  if (options.top_k < 1) throw_usage("--top-k must be at least 1");

  Manifest manifest = load_manifest(options.manifest_path);
  ModelBundle bundle = load_bundle(options.models_dir);
  if (std::find(bundle.classes.begin(), bundle.classes.end(), options.style) ==
      bundle.classes.end()) {
    throw_data("style \"" + options.style + "\" is not among the model classes");
  }

  std::vector<const ImageRecord*> candidates;
  std::string needle = lower(options.text);
  for (const ImageRecord& r : manifest.records) {
    if (!needle.empty() && lower(r.caption).find(needle) == std::string::npos) {
      continue;
    }
    candidates.push_back(&r);
  }
  if (candidates.empty()) {
    log << "warning: no candidate matches the query text\n";
    write_text_file(options.out_path,
                    json{{"style", options.style}, {"text", options.text},
                         {"results", json::array()}}
                            .dump(2) +
                        "\n");
    if (!options.html_path.empty()) {
      write_text_file(options.html_path, gallery_html({}));
    }
    return;
  }

  std::map<std::string, ContentScores> content;
  if (!options.content_path.empty()) {
    content = load_content_scores(options.content_path);
  }
  if (bundle.mode == "fusion_x_content" && content.empty()) {
    throw_usage("this bundle needs --content <file>");
  }
  std::map<std::string, FeatureChannel> channels = resolve_channels(
      bundle.channel_names, options.features, manifest, log);
  std::vector<std::string> ids;
  for (const ImageRecord& r : manifest.records) ids.push_back(r.id);
  Scorer scorer = make_scorer(std::move(bundle), std::move(channels), ids,
                              content.empty() ? nullptr : &content);

  std::vector<RankedResult> ranked = rank_records(
      candidates, scorer, options.style, options.top_k, options.min_score);

  json out;
  out["style"] = options.style;
  out["text"] = options.text;
  out["results"] = ranked_json(ranked);
  write_text_file(options.out_path, out.dump(2) + "\n");
  if (!options.html_path.empty()) {
    write_text_file(options.html_path,
                    gallery_html({{options.style + (options.text.empty()
                                                        ? ""
                                                        : " / \"" + options.text +
                                                              "\""),
                                   ranked}}));
  }
  log << ranked.size() << " results for style " << options.style << "\n";
}

void cmd_cross_rank(const CrossRankOptions& options, std::ostream& log) {
  if (options.top_k < 1) throw_usage("--top-k must be at least 1");
  Manifest manifest = load_manifest(options.manifest_path);
  ModelBundle bundle = load_bundle(options.models_dir);
  if (bundle.mode == "fusion_x_content") {
    throw_usage("cross-rank supports single and fusion bundles only");
  }

  std::vector<const ImageRecord*> candidates;
  std::vector<std::string> ids;
  for (const ImageRecord& r : manifest.records) {
    candidates.push_back(&r);
    ids.push_back(r.id);
  }

  json styles_json;
  std::vector<std::pair<std::string, std::vector<RankedResult>>> rows;
  if (candidates.empty()) {
    for (const std::string& cls : bundle.classes) {
      styles_json[cls] = json::array();
    }
  } else {
    std::map<std::string, FeatureChannel> channels = resolve_channels(
        bundle.channel_names, options.features, manifest, log);
    std::vector<std::string> classes = bundle.classes;
    Scorer scorer =
        make_scorer(std::move(bundle), std::move(channels), ids, nullptr);
    for (const std::string& cls : classes) {
      std::vector<RankedResult> ranked =
          rank_records(candidates, scorer, cls, options.top_k, std::nullopt);
      styles_json[cls] = ranked_json(ranked);
      rows.emplace_back(cls, std::move(ranked));
    }
  }

  write_text_file(options.out_path,
                  json{{"styles", styles_json}}.dump(2) + "\n");
  if (!options.html_path.empty()) {
    write_text_file(options.html_path, gallery_html(rows));
  }
  log << "ranked " << candidates.size() << " records across "
      << styles_json.size() << " styles\n";
}

}  // namespace stylerec
