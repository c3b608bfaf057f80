#include <sstream>

#include "json.hpp"
#include "stylerec/error.hpp"
#include "stylerec/eval.hpp"

namespace stylerec {

using nlohmann::json;

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "html") return ReportFormat::html;
  throw_usage("unknown report format: " + name);
}

namespace {

// Shortest-round-trip formatting, shared by every format so that numbers
// agree across json/csv/html outputs.
std::string fmt(double v) { return json(v).dump(); }

json report_to_json(const EvalReport& r) {
  json j;
  j["magic"] = "EVAL1";
  j["classes"] = r.classes;
  j["per_class_ap"] = r.per_class_ap;
  j["mean_ap"] = r.mean_ap;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["mean_accuracy"] = r.mean_accuracy;
  j["thresholds"] = r.thresholds;
  const std::size_t k = r.classes.size();
  json rows = json::array();
  for (std::size_t c = 0; c < k; ++c) {
    json row = json::array();
    for (std::size_t p = 0; p < k; ++p) row.push_back(r.confusion.rows[c * k + p]);
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["prior"] = r.confusion.prior;
  if (r.correlation) {
    json corr;
    corr["rows"] = r.correlation->row_names;
    corr["cols"] = r.correlation->col_names;
    json values = json::array();
    json flags = json::array();
    for (std::size_t i = 0; i < r.correlation->values.size(); ++i) {
      values.push_back(r.correlation->values[i]);
      flags.push_back(static_cast<bool>(r.correlation->zero_variance[i]));
    }
    corr["values"] = values;
    corr["zero_variance"] = flags;
    j["correlation"] = corr;
  }
  j["seed"] = r.seed;
  j["ap_per_class"] = r.ap_per_class;
  j["accuracy_subset_size"] = r.accuracy_subset_size;
  return j;
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "class,ap,accuracy,threshold,prior\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const std::string& cls = r.classes[c];
    std::string quoted = cls;
    bool needs_quotes = quoted.find_first_of(",\"") != std::string::npos;
    if (needs_quotes) {
      std::string escaped = "\"";
      for (char ch : quoted) {
        if (ch == '"') escaped += "\"\"";
        else escaped += ch;
      }
      escaped += "\"";
      quoted = escaped;
    }
    out << quoted << ',' << fmt(r.per_class_ap.at(cls)) << ','
        << fmt(r.per_class_accuracy.at(cls)) << ','
        << fmt(r.thresholds.at(cls)) << ',' << fmt(r.confusion.prior[c])
        << "\n";
  }
  return out.str();
}

std::string html_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string heat_color(double v) {
  // White at 0 to steel blue at 1.
  int r = static_cast<int>(255 - 185 * v);
  int g = static_cast<int>(255 - 125 * v);
  int b = 255;
  std::ostringstream out;
  out << "rgb(" << r << "," << g << "," << b << ")";
  return out.str();
}

std::string render_html(const EvalReport& r) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
      << "<title>Evaluation report</title>\n<style>\n"
      << "body{font-family:sans-serif;margin:2em;}\n"
      << "table{border-collapse:collapse;}\n"
      << "td,th{border:1px solid #ccc;padding:4px 8px;font-size:12px;}\n"
      << ".bar{background:#4a78b0;height:12px;display:inline-block;}\n"
      << ".barbox{width:240px;background:#eee;display:inline-block;}\n"
      << "</style></head><body>\n";
  out << "<h1>Evaluation report</h1>\n";
  out << "<p>mean AP " << fmt(r.mean_ap) << " &middot; mean accuracy "
      << fmt(r.mean_accuracy) << " &middot; seed " << r.seed << "</p>\n";

  out << "<h2>Per-class metrics</h2>\n<table>\n"
      << "<tr><th>class</th><th>AP</th><th></th><th>accuracy</th></tr>\n";
  for (const std::string& cls : r.classes) {
    double ap = r.per_class_ap.at(cls);
    int width = static_cast<int>(ap * 240);
    out << "<tr><td>" << html_escape(cls) << "</td><td>" << fmt(ap)
        << "</td><td><span class=\"barbox\"><span class=\"bar\" style=\"width:"
        << width << "px\"></span></span></td><td>"
        << fmt(r.per_class_accuracy.at(cls)) << "</td></tr>\n";
  }
  out << "</table>\n";

  const std::size_t k = r.classes.size();
  out << "<h2>Confusion matrix</h2>\n<table>\n<tr><th></th>";
  for (const std::string& cls : r.classes) {
    out << "<th>" << html_escape(cls) << "</th>";
  }
  out << "<th>prior</th></tr>\n";
  for (std::size_t c = 0; c < k; ++c) {
    out << "<tr><th>" << html_escape(r.classes[c]) << "</th>";
    for (std::size_t p = 0; p < k; ++p) {
      double v = r.confusion.rows[c * k + p];
      out << "<td style=\"background:" << heat_color(v) << "\">" << fmt(v)
          << "</td>";
    }
    out << "<td>" << fmt(r.confusion.prior[c]) << "</td></tr>\n";
  }
  out << "</table>\n";

  if (r.correlation) {
    const CorrelationMatrix& corr = *r.correlation;
    out << "<h2>Content / style correlation</h2>\n<table>\n<tr><th></th>";
    for (const std::string& cls : corr.col_names) {
      out << "<th>" << html_escape(cls) << "</th>";
    }
    out << "</tr>\n";
    for (std::size_t row = 0; row < corr.row_names.size(); ++row) {
      out << "<tr><th>" << html_escape(corr.row_names[row]) << "</th>";
      for (std::size_t col = 0; col < corr.col_names.size(); ++col) {
        out << "<td>" << fmt(corr.at(static_cast<int>(row), static_cast<int>(col)))
            << "</td>";
      }
      out << "</tr>\n";
    }
    out << "</table>\n";
  }
  out << "</body></html>\n";
  return out.str();
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  validate_report(report);
  switch (format) {
    case ReportFormat::json:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::csv:
      return render_csv(report);
    case ReportFormat::html:
      return render_html(report);
  }
  throw_internal("unreachable report format");
}

EvalReport parse_report(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || j.value("magic", "") != std::string("EVAL1")) {
    throw_data("not an EVAL1 report");
  }
  EvalReport r;
  r.classes = j.at("classes").get<std::vector<std::string>>();
  r.per_class_ap = j.at("per_class_ap").get<std::map<std::string, double>>();
  r.mean_ap = j.at("mean_ap").get<double>();
  r.per_class_accuracy =
      j.at("per_class_accuracy").get<std::map<std::string, double>>();
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.thresholds = j.at("thresholds").get<std::map<std::string, double>>();
  r.confusion.classes = r.classes;
  for (const auto& row : j.at("confusion")) {
    for (const auto& v : row) r.confusion.rows.push_back(v.get<double>());
  }
  r.confusion.prior = j.at("prior").get<std::vector<double>>();
  if (j.contains("correlation")) {
    CorrelationMatrix corr;
    corr.row_names = j["correlation"].at("rows").get<std::vector<std::string>>();
    corr.col_names = j["correlation"].at("cols").get<std::vector<std::string>>();
    for (const auto& v : j["correlation"].at("values")) {
      corr.values.push_back(v.get<double>());
    }
    for (const auto& f : j["correlation"].at("zero_variance")) {
      corr.zero_variance.push_back(f.get<bool>());
    }
    r.correlation = std::move(corr);
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ap_per_class = j.at("ap_per_class").get<std::size_t>();
  r.accuracy_subset_size =
      j.at("accuracy_subset_size").get<std::map<std::string, std::size_t>>();
  validate_report(r);
  return r;
}

}  // namespace stylerec
