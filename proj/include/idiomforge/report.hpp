#pragma once

// Human annotations, metric-vs-human correlation, and report rendering
// (text table, CSV, JSON) with parsers for the CSV and JSON forms.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "idiomforge/bleu.hpp"
#include "idiomforge/core.hpp"
#include "idiomforge/jsonl.hpp"
#include "idiomforge/stats.hpp"

namespace idiomforge::report {

struct Annotation {
  std::string record_id;
  RubricScore human_score;
  std::optional<std::string> annotator;
  std::optional<LanguagePair> pair;
};

/// JSONL of {"record_id","human_score","annotator"?,"source_lang"?,"target_lang"?}.
/// A record may be scored by several annotators, each at most once.
inline std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::vector<Annotation> out;
  std::set<std::pair<std::string, std::string>> seen;
  jsonl::for_each(path, [&](const jsonl::json& obj, std::size_t) {
    auto score = jsonl::optional_integer(obj, "human_score");
    if (!score) throw ParseError("missing field \"human_score\"");
    Annotation a{jsonl::require_string(obj, "record_id"), RubricScore(*score),
                 jsonl::optional_string(obj, "annotator"), std::nullopt};
    auto src = jsonl::optional_string(obj, "source_lang");
    auto tgt = jsonl::optional_string(obj, "target_lang");
    if (src && tgt) a.pair = LanguagePair{LanguageCode::parse(*src), LanguageCode::parse(*tgt)};
    if (!seen.insert({a.record_id, a.annotator.value_or("")}).second) {
      throw ParseError("record '" + a.record_id + "' annotated twice by the same annotator");
    }
    out.push_back(std::move(a));
  });
  return out;
}

enum class Metric { Judge, BleuSentence };

inline std::string_view metric_id(Metric m) {
  return m == Metric::Judge ? "judge" : "bleu_sentence";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "judge") return Metric::Judge;
  if (s == "bleu_sentence" || s == "bleu") return Metric::BleuSentence;
  throw ParseError("unknown metric '" + std::string(s) + "'");
}

struct MetricCorrelation {
  std::string metric;
  std::optional<double> pearson_r;
  std::optional<double> spearman_rho;
  std::optional<double> kendall_tau_b;
  std::size_t n = 0;
  std::size_t excluded = 0;
  std::string note;  // why a coefficient is undefined, if one is

  friend bool operator==(const MetricCorrelation&, const MetricCorrelation&) = default;
};

struct CorrelationReport {
  std::string pair;  // e.g. "Zh->En"
  std::vector<MetricCorrelation> metrics;

  friend bool operator==(const CorrelationReport&, const CorrelationReport&) = default;
};

/// Mean score of one system on one language pair.
struct AggregateRow {
  std::string system;
  std::string pair;
  stats::ScoreSummary summary;

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct Report {
  std::vector<CorrelationReport> correlations;
  std::vector<AggregateRow> aggregates;

  friend bool operator==(const Report&, const Report&) = default;
};

inline MetricCorrelation correlate_samples(std::string metric, std::vector<double> metric_values,
                                           std::vector<double> human_values, std::size_t excluded) {
  MetricCorrelation row;
  row.metric = std::move(metric);
  row.n = metric_values.size();
  row.excluded = excluded;
  auto attempt = [&](auto fn, std::optional<double>& slot) {
    try {
      slot = fn(metric_values, human_values);
    } catch (const stats::UndefinedCorrelation& e) {
      if (row.note.empty()) row.note = e.what();
    }
  };
  attempt([](const auto& x, const auto& y) { return stats::pearson(x, y); }, row.pearson_r);
  attempt([](const auto& x, const auto& y) { return stats::spearman(x, y); }, row.spearman_rho);
  attempt([](const auto& x, const auto& y) { return stats::kendall_tau_b(x, y); }, row.kendall_tau_b);
  return row;
}

/// Joins evals with human scores on record id (several annotators of one
/// record are averaged) and correlates each metric per language pair.
/// Records lacking either side are excluded and counted. Input order does
/// not affect any value: samples are ordered by record id first.
inline std::vector<CorrelationReport> correlate(const std::vector<EvalRecord>& evals,
                                                const std::vector<Annotation>& annotations,
                                                const std::vector<Metric>& metrics,
                                                const std::optional<LanguagePair>& default_pair = {}) {
  struct Human {
    double sum = 0;
    int count = 0;
    std::optional<LanguagePair> pair;
  };
  std::map<std::string, Human> human;
  for (const auto& a : annotations) {
    auto& h = human[a.record_id];
    h.sum += a.human_score.value();
    ++h.count;
    if (a.pair) h.pair = a.pair;
  }

  std::map<LanguagePair, std::map<std::string, const EvalRecord*>> groups;
  for (const auto& e : evals) {
    std::optional<LanguagePair> pair = e.pair;
    if (!pair) {
      auto it = human.find(e.record_id);
      if (it != human.end()) pair = it->second.pair;
    }
    if (!pair) pair = default_pair;
    if (!pair) {
      throw ConfigError("record '" + e.record_id + "' has no language pair (pass --pair)");
    }
    groups[*pair][e.record_id] = &e;
  }

  bool any_joined = false;
  std::vector<CorrelationReport> out;
  for (const auto& [pair, records] : groups) {
    CorrelationReport rep{pair.label(), {}};
    for (Metric m : metrics) {
      std::vector<double> xs, ys;
      std::size_t excluded = 0;
      for (const auto& [id, e] : records) {
        auto h = human.find(id);
        std::optional<double> value;
        if (m == Metric::Judge && e->judge_score) value = e->judge_score->value();
        if (m == Metric::BleuSentence) value = e->bleu_sentence;
        if (h == human.end() || !value) {
          ++excluded;
          continue;
        }
        xs.push_back(*value);
        ys.push_back(h->second.sum / h->second.count);
      }
      any_joined = any_joined || !xs.empty();
      rep.metrics.push_back(correlate_samples(std::string(metric_id(m)), xs, ys, excluded));
    }
    out.push_back(std::move(rep));
  }
  if (!any_joined) throw InvalidArgument("insufficient paired data: no record has both scores");
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

enum class Format { TextTable, Csv, Json };

inline Format parse_format(std::string_view s) {
  if (s == "text-table" || s == "text") return Format::TextTable;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ParseError("unknown report format '" + std::string(s) + "'");
}

inline constexpr std::string_view kMissing = "—";

inline std::string metric_display(std::string_view id) {
  if (id == "judge") return "LLM judge";
  if (id == "bleu_sentence") return "BLEU (" + std::string(kBleuLabel) + ")";
  return std::string(id);
}

namespace detail {

inline std::string cell(const std::optional<double>& v, int decimals = 4) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : std::string(kMissing);
}

inline std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], unicode::scalar_length(row[c]));
    }
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) line += "  ";
      line += rows[r][c];
      if (c + 1 < rows[r].size()) {
        line.append(width[c] - unicode::scalar_length(rows[r][c]), ' ');
      }
    }
    out += line + '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string csv_number(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

inline const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> h = {
      "kind",    "pair",  "name",  "pearson_r", "spearman_rho", "kendall_tau_b", "n",
      "excluded", "mean", "count", "score_1",   "score_2",      "score_3",       "note"};
  return h;
}

}  // namespace detail

inline std::string render_text(const Report& report) {
  std::vector<std::vector<std::string>> rows = {
      {"Pair", "Metric", "Pearson's r", "Spearman's rho", "Kendall's tau-b", "n"}};
  for (const auto& rep : report.correlations) {
    for (const auto& m : rep.metrics) {
      rows.push_back({rep.pair, metric_display(m.metric), detail::cell(m.pearson_r),
                      detail::cell(m.spearman_rho), detail::cell(m.kendall_tau_b),
                      std::to_string(m.n)});
    }
  }
  std::string out = detail::table(rows);

  if (!report.aggregates.empty()) {
    std::vector<std::string> pairs, systems;
    for (const auto& a : report.aggregates) {
      if (std::find(pairs.begin(), pairs.end(), a.pair) == pairs.end()) pairs.push_back(a.pair);
      if (std::find(systems.begin(), systems.end(), a.system) == systems.end()) {
        systems.push_back(a.system);
      }
    }
    std::vector<std::vector<std::string>> agg = {{"System"}};
    for (const auto& p : pairs) agg[0].push_back(p);
    for (const auto& s : systems) {
      std::vector<std::string> row{s};
      for (const auto& p : pairs) {
        auto it = std::find_if(report.aggregates.begin(), report.aggregates.end(),
                               [&](const AggregateRow& a) { return a.system == s && a.pair == p; });
        row.push_back(it == report.aggregates.end()
                          ? std::string(kMissing)
                          : fmt::format("{:.2f} (n={})", it->summary.mean, it->summary.count));
      }
      agg.push_back(std::move(row));
    }
    out += "\nMean judge score (1-3)\n" + detail::table(agg);
  }

  std::vector<std::string> notes;
  for (const auto& rep : report.correlations) {
    for (const auto& m : rep.metrics) {
      if (!m.note.empty()) {
        notes.push_back(rep.pair + " " + metric_display(m.metric) + ": " + m.note);
      }
    }
  }
  if (!report.correlations.empty()) {
    out += "\nKendall's tau is tau-b (tie-corrected). BLEU is " + std::string(kBleuLabel) +
           ", sentence level.\n";
    for (const auto& n : notes) out += n + '\n';
  }
  return out;
}

inline std::string render_csv(const Report& report) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += detail::csv_field(fields[i]);
    }
    out += '\n';
  };
  emit(detail::csv_header());
  for (const auto& rep : report.correlations) {
    for (const auto& m : rep.metrics) {
      emit({"correlation", rep.pair, m.metric, detail::csv_number(m.pearson_r),
            detail::csv_number(m.spearman_rho), detail::csv_number(m.kendall_tau_b),
            std::to_string(m.n), std::to_string(m.excluded), "", "", "", "", "", m.note});
    }
  }
  for (const auto& a : report.aggregates) {
    emit({"aggregate", a.pair, a.system, "", "", "", "", "", fmt::format("{}", a.summary.mean),
          std::to_string(a.summary.count), std::to_string(a.summary.histogram[0]),
          std::to_string(a.summary.histogram[1]), std::to_string(a.summary.histogram[2]), ""});
  }
  return out;
}

inline jsonl::ordered_json to_json(const Report& report) {
  auto num = [](const std::optional<double>& v) {
    return v ? jsonl::ordered_json(*v) : jsonl::ordered_json(nullptr);
  };
  jsonl::ordered_json j;
  j["kendall_variant"] = "tau-b";
  j["bleu"] = kBleuLabel;
  j["correlations"] = jsonl::ordered_json::array();
  for (const auto& rep : report.correlations) {
    jsonl::ordered_json r;
    r["pair"] = rep.pair;
    r["metrics"] = jsonl::ordered_json::array();
    for (const auto& m : rep.metrics) {
      jsonl::ordered_json mj;
      mj["metric"] = m.metric;
      mj["pearson_r"] = num(m.pearson_r);
      mj["spearman_rho"] = num(m.spearman_rho);
      mj["kendall_tau_b"] = num(m.kendall_tau_b);
      mj["n"] = m.n;
      mj["excluded"] = m.excluded;
      mj["note"] = m.note;
      r["metrics"].push_back(std::move(mj));
    }
    j["correlations"].push_back(std::move(r));
  }
  j["aggregates"] = jsonl::ordered_json::array();
  for (const auto& a : report.aggregates) {
    jsonl::ordered_json aj;
    aj["system"] = a.system;
    aj["pair"] = a.pair;
    aj["mean"] = a.summary.mean;
    aj["count"] = a.summary.count;
    aj["histogram"] = a.summary.histogram;
    j["aggregates"].push_back(std::move(aj));
  }
  return j;
}

inline std::string render_json(const Report& report) { return to_json(report).dump(2) + "\n"; }

inline std::string render_report(const Report& report, Format format) {
  switch (format) {
    case Format::TextTable: return render_text(report);
    case Format::Csv: return render_csv(report);
    case Format::Json: return render_json(report);
  }
  return {};
}

inline Report parse_report_json(std::string_view text) {
  Report report;
  try {
    auto j = jsonl::json::parse(text);
    auto num = [](const jsonl::json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    for (const auto& r : j.at("correlations")) {
      CorrelationReport rep{r.at("pair").get<std::string>(), {}};
      for (const auto& m : r.at("metrics")) {
        rep.metrics.push_back({m.at("metric").get<std::string>(), num(m.at("pearson_r")),
                               num(m.at("spearman_rho")), num(m.at("kendall_tau_b")),
                               m.at("n").get<std::size_t>(), m.at("excluded").get<std::size_t>(),
                               m.value("note", "")});
      }
      report.correlations.push_back(std::move(rep));
    }
    for (const auto& a : j.at("aggregates")) {
      AggregateRow row{a.at("system").get<std::string>(), a.at("pair").get<std::string>(), {}};
      row.summary.mean = a.at("mean").get<double>();
      row.summary.count = a.at("count").get<std::size_t>();
      row.summary.histogram = a.at("histogram").get<std::array<std::size_t, 3>>();
      report.aggregates.push_back(std::move(row));
    }
  } catch (const jsonl::json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote in report CSV", line_no);
  fields.push_back(std::move(field));
  return fields;
}

inline std::optional<double> csv_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace detail

inline Report parse_report_csv(std::string_view text) {
  Report report;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line, line_no);
    if (f.size() != detail::csv_header().size()) {
      throw ParseError("report CSV row has " + std::to_string(f.size()) + " fields", line_no);
    }
    if (line_no == 1) {
      if (f != detail::csv_header()) throw ParseError("unexpected report CSV header", 1);
      continue;
    }
    try {
      if (f[0] == "correlation") {
        if (report.correlations.empty() || report.correlations.back().pair != f[1]) {
          report.correlations.push_back({f[1], {}});
        }
        report.correlations.back().metrics.push_back(
            {f[2], detail::csv_optional(f[3]), detail::csv_optional(f[4]),
             detail::csv_optional(f[5]), std::stoul(f[6]), std::stoul(f[7]), f[13]});
      } else if (f[0] == "aggregate") {
        AggregateRow row{f[2], f[1], {}};
        row.summary.mean = std::stod(f[8]);
        row.summary.count = std::stoul(f[9]);
        row.summary.histogram = {std::stoul(f[10]), std::stoul(f[11]), std::stoul(f[12])};
        report.aggregates.push_back(std::move(row));
      } else {
        throw ParseError("unknown row kind '" + f[0] + "'", line_no);
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("bad number in report CSV", line_no);
    } catch (const std::out_of_range&) {
      throw ParseError("number out of range in report CSV", line_no);
    }
  }
  return report;
}

}  // namespace idiomforge::report
