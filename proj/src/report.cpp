#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "owaic/errors.hpp"
#include "owaic/study.hpp"
#include "text_util.hpp"

namespace owaic {

namespace {

using detail::format_double;

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error("error while writing " + path.string());
  written.push_back(path);
}

std::string summary_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "variant,model,replicates,mean_waic,se_waic,mean_lppd,se_lppd,mean_p_waic,se_p_waic\n";
  for (const SummaryRow& s : r.summary) {
    os << csv_field(s.variant) << ',' << s.model << ',' << s.replicates << ','
       << format_double(s.mean_waic) << ',' << optional_number(s.se_waic) << ','
       << format_double(s.mean_lppd) << ',' << optional_number(s.se_lppd) << ','
       << format_double(s.mean_p_waic) << ',' << optional_number(s.se_p_waic) << '\n';
  }
  return os.str();
}

std::string selection_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "variant,true_model,replicates,correct,proportion,se";
  for (const std::string& m : r.models) os << ",chosen_" << m;
  os << '\n';
  for (const SelectionRow& s : r.selection) {
    os << csv_field(s.variant) << ',' << s.true_model << ',' << s.replicates << ',' << s.correct
       << ',' << format_double(s.proportion) << ',' << optional_number(s.se);
    for (std::size_t c : s.chosen) os << ',' << c;
    os << '\n';
  }
  return os.str();
}

std::string replicates_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "replicate,seed,model,variant,ok,waic,lppd,p_waic,min_ess,low_ess,neg_inf,error\n";
  for (const ReplicateRecord& rec : r.records) {
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
      os << rec.replicate << ',' << rec.seed << ',' << rec.model << ',' << csv_field(r.variants[v]) << ','
         << (rec.ok ? 1 : 0) << ',';
      if (rec.ok) {
        const FractionResult& f = rec.variants[v].full;
        os << format_double(f.waic) << ',' << format_double(f.lppd) << ',' << format_double(f.p_waic)
           << ',' << format_double(rec.min_ess) << ',' << rec.low_ess_count << ',' << rec.neg_inf_count
           << ",\n";
      } else {
        os << ",,,,,," << csv_field(rec.error) << '\n';
      }
    }
  }
  return os.str();
}

std::string checkpoints_csv(const StudyReport& r) {
  std::ostringstream os;
  os << "variant,model,fraction,mean_waic\n";
  for (const SummaryRow& s : r.summary) {
    const std::size_t n = s.fraction_mean_waic.size();
    for (std::size_t f = 0; f < n; ++f) {
      const double q = n == 1 ? 1.0 : r.fractions.at(f);
      os << csv_field(s.variant) << ',' << s.model << ',' << format_double(q) << ','
         << format_double(s.fraction_mean_waic[f]) << '\n';
    }
  }
  return os.str();
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string report_json(const StudyReport& r) {
  using nlohmann::json;
  json doc;
  doc["family"] = r.family;
  doc["models"] = r.models;
  doc["variants"] = r.variants;
  doc["fractions"] = r.fractions;
  doc["summary"] = json::array();
  for (const SummaryRow& s : r.summary) {
    doc["summary"].push_back({{"variant", s.variant},
                              {"model", s.model},
                              {"replicates", s.replicates},
                              {"meanWaic", s.mean_waic},
                              {"seWaic", optional_json(s.se_waic)},
                              {"meanLppd", s.mean_lppd},
                              {"seLppd", optional_json(s.se_lppd)},
                              {"meanPWaic", s.mean_p_waic},
                              {"sePWaic", optional_json(s.se_p_waic)},
                              {"fractionMeanWaic", s.fraction_mean_waic}});
  }
  doc["selection"] = json::array();
  for (const SelectionRow& s : r.selection) {
    doc["selection"].push_back({{"variant", s.variant},
                                {"trueModel", s.true_model},
                                {"replicates", s.replicates},
                                {"correct", s.correct},
                                {"proportion", s.proportion},
                                {"se", optional_json(s.se)},
                                {"chosen", s.chosen}});
  }
  const StudyDiagnostics& d = r.diagnostics;
  doc["diagnostics"] = {{"tasks", d.tasks},
                        {"failedTasks", d.failed_tasks},
                        {"excludedReplicates", d.excluded_replicates},
                        {"failureFlag", d.failure_flag},
                        {"lowEssRuns", d.low_ess_runs},
                        {"negInfValues", d.neg_inf_values},
                        {"messages", d.messages}};
  return doc.dump(2) + "\n";
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fixed(const std::optional<double>& v, int digits = 2) { return v ? fixed(*v, digits) : "n/a"; }

// Right-aligned columns except the first, which is left-aligned.
std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      const std::string& cell = rows[i][c];
      const std::string pad(width[c] - cell.size(), ' ');
      if (c > 0) line += "  ";
      line += c == 0 ? cell + pad : pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  if (text == "pretty") return ReportFormat::pretty;
  throw DomainError("unknown report format '" + std::string(text) + "' (expected csv, json or pretty)");
}

std::string format_pretty(const StudyReport& r) {
  std::string out = "family " + r.family + "\n\n";
  std::vector<std::vector<std::string>> means{
      {"WAIC type", "model", "n", "mean(WAIC)", "se", "mean(lppd)", "se", "mean(pWAIC)", "se"}};
  for (const SummaryRow& s : r.summary) {
    means.push_back({s.variant, s.model, std::to_string(s.replicates), fixed(s.mean_waic), fixed(s.se_waic),
                     fixed(s.mean_lppd), fixed(s.se_lppd), fixed(s.mean_p_waic), fixed(s.se_p_waic)});
  }
  out += table(means);

  std::vector<std::vector<std::string>> sel{{"WAIC type", "true model", "n", "proportion", "se"}};
  for (const SelectionRow& s : r.selection) {
    sel.push_back({s.variant, s.true_model, std::to_string(s.replicates), fixed(s.proportion, 3),
                   fixed(s.se, 3)});
  }
  out += "\n" + table(sel);

  const StudyDiagnostics& d = r.diagnostics;
  out += "\nfits " + std::to_string(d.tasks) + ", failed " + std::to_string(d.failed_tasks) +
         ", replicates excluded from selection " + std::to_string(d.excluded_replicates) + "\n";
  for (const std::string& m : d.messages) out += "warning: " + m + "\n";
  return out;
}

std::vector<std::filesystem::path> emit_report(const StudyReport& report, ReportFormat format,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  switch (format) {
    case ReportFormat::csv:
      write_file(dir / "summary.csv", summary_csv(report), written);
      write_file(dir / "selection.csv", selection_csv(report), written);
      write_file(dir / "replicates.csv", replicates_csv(report), written);
      write_file(dir / "checkpoints.csv", checkpoints_csv(report), written);
      break;
    case ReportFormat::json:
      write_file(dir / "report.json", report_json(report), written);
      break;
    case ReportFormat::pretty:
      write_file(dir / "report.txt", format_pretty(report), written);
      break;
  }
  return written;
}

}  // namespace owaic
