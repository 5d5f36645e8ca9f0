#pragma once

// Run outputs: CSV tables, trial records (JSONL), the run manifest and
// gnuplot data/script emission. Numbers use shortest round-trip formatting;
// missing values are empty fields. LF line endings throughout.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alsim/experiment.hpp"

namespace alsim {

namespace csv {

inline std::string num(double v) { return std::isfinite(v) ? detail::format_double(v) : std::string(); }
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// One record per line; quoted fields may hold commas and doubled quotes.
inline std::vector<std::string> split(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw parse_error(line_no, "unterminated quote");
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw parse_error(line_no, "expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw data_error("empty CSV");
  return t;
}

inline double to_double(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw parse_error(line_no, "not a number: '" + s + "'");
  return v;
}

inline std::int64_t to_int(const std::string& s, std::size_t line_no) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) throw parse_error(line_no, "not an integer: '" + s + "'");
  return v;
}

}  // namespace csv

// ---------------------------------------------------------------------------
// Aggregate curves

struct AggregateRow {
  std::string scheme;
  int round = 0;  // curve point index; 0 is the seed-only model
  std::int64_t training_size = 0;
  double metric_mean = 0;
  std::optional<double> ci_lo, ci_hi;
  bool operator==(const AggregateRow&) const = default;
};

inline const char* aggregate_header = "scheme,round,training_size,metric_mean,ci_lo,ci_hi";

inline std::vector<std::string> scheme_names(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& s : c.schemes) out.push_back(s.name.empty() ? default_scheme_name(s) : s.name);
  return out;
}

inline std::vector<AggregateRow> aggregate_rows(const ExperimentConfig& c, const ExperimentResult& r) {
  std::vector<AggregateRow> out;
  for (const auto& name : scheme_names(c)) {
    const auto curves = scheme_curves(r, name);
    const auto agg = aggregate_curves(curves);
    for (std::size_t i = 0; i < agg.mean.size(); ++i) {
      AggregateRow row{name, static_cast<int>(i), agg.training_sizes[i], agg.mean[i], std::nullopt, std::nullopt};
      if (agg.lower) {
        row.ci_lo = (*agg.lower)[i];
        row.ci_hi = (*agg.upper)[i];
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << aggregate_header << '\n';
  for (const auto& r : rows)
    out << csv::field(r.scheme) << ',' << r.round << ',' << r.training_size << ',' << csv::num(r.metric_mean) << ',' << csv::num(r.ci_lo)
        << ',' << csv::num(r.ci_hi) << '\n';
}

inline std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  const auto t = csv::read(in);
  if (t.header != csv::split(aggregate_header, 1)) throw data_error(std::string("aggregate CSV: header must be '") + aggregate_header + "'");
  if (t.rows.empty()) throw data_error("aggregate CSV: no data rows");
  std::vector<AggregateRow> out;
  std::size_t line = 1;
  for (const auto& f : t.rows) {
    ++line;
    AggregateRow r;
    r.scheme = f[0];
    if (r.scheme.empty()) throw parse_error(line, "empty scheme name");
    r.round = static_cast<int>(csv::to_int(f[1], line));
    r.training_size = csv::to_int(f[2], line);
    r.metric_mean = csv::to_double(f[3], line);
    if (std::isnan(r.metric_mean)) throw parse_error(line, "metric_mean is required");
    if (f[4].empty() != f[5].empty()) throw parse_error(line, "ci_lo and ci_hi must both be present or both empty");
    if (!f[4].empty()) {
      r.ci_lo = csv::to_double(f[4], line);
      r.ci_hi = csv::to_double(f[5], line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gains, computed on the mean curves

struct GainRow {
  std::string scheme_pair;  // "<active>/<passive>"
  std::string gain_kind;    // last_vs_max | first_vs_final
  std::optional<Gain> gain;  // absent when the active curve never surpasses
};

inline const char* gains_header = "scheme_pair,gain_kind,gain,active_size,reference_size";

inline std::vector<GainRow> gain_rows(const ExperimentConfig& c, const std::vector<AggregateRow>& agg) {
  auto mean_curve = [&](const std::string& name) {
    LearningCurve lc;
    for (const auto& r : agg)
      if (r.scheme == name) lc.points.push_back({r.training_size, r.metric_mean});
    return lc;
  };
  std::vector<GainRow> out;
  const auto names = scheme_names(c);
  for (std::size_t p = 0; p < c.schemes.size(); ++p) {
    if (c.schemes[p].kind != SchemeKind::passive) continue;
    const auto passive = mean_curve(names[p]);
    for (std::size_t a = 0; a < c.schemes.size(); ++a) {
      if (c.schemes[a].kind == SchemeKind::passive) continue;
      const auto active = mean_curve(names[a]);
      const auto pair = names[a] + "/" + names[p];
      out.push_back({pair, "last_vs_max", last_vs_max_gain(active, passive)});
      out.push_back({pair, "first_vs_final", first_vs_final_gain(active, passive)});
    }
  }
  return out;
}

inline void write_gains_csv(std::ostream& out, const std::vector<GainRow>& rows) {
  out << gains_header << '\n';
  for (const auto& r : rows) {
    out << csv::field(r.scheme_pair) << ',' << r.gain_kind << ',';
    if (r.gain) out << csv::num(r.gain->value) << ',' << r.gain->active_size << ',' << r.gain->reference_size;
    else out << ",,";
    out << '\n';
  }
}

inline std::vector<GainRow> read_gains_csv(std::istream& in) {
  const auto t = csv::read(in);
  if (t.header != csv::split(gains_header, 1)) throw data_error(std::string("gains CSV: header must be '") + gains_header + "'");
  std::vector<GainRow> out;
  std::size_t line = 1;
  for (const auto& f : t.rows) {
    ++line;
    GainRow r{f[0], f[1], std::nullopt};
    if (!f[2].empty()) r.gain = Gain{csv::to_double(f[2], line), csv::to_int(f[3], line), csv::to_int(f[4], line)};
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-trial tables

inline void write_curves_csv(std::ostream& out, const ExperimentResult& r) {
  out << "scheme,trial,round,training_size,metric,eval_model,retained_size\n";
  if (r.trials.empty()) return;
  for (std::size_t s = 0; s < r.trials.front().schemes.size(); ++s)
    for (const auto& t : r.trials) {
      const auto& tr = t.schemes[s];
      for (std::size_t i = 0; i < tr.curve.size(); ++i)
        out << csv::field(tr.scheme) << ',' << t.trial_index << ',' << i << ',' << tr.curve.points[i].training_size << ','
            << csv::num(tr.curve.points[i].value) << ',' << to_string(tr.eval_kinds[i]) << ',' << tr.retained_sizes[i] << '\n';
    }
}

// `round` here is the selection round (0-based); its curve point is round + 1.
inline void write_batches_csv(std::ostream& out, const ExperimentResult& r) {
  out << "trial,round,scheme,example_id,raw_margin,penalized_margin,simple_weight\n";
  for (const auto& t : r.trials)
    for (const auto& tr : t.schemes)
      for (const auto& b : tr.batches)
        for (std::size_t i = 0; i < b.ids.size(); ++i)
          out << t.trial_index << ',' << b.round << ',' << csv::field(tr.scheme) << ',' << b.ids[i] << ',' << csv::num(b.raw_margin[i]) << ','
              << csv::num(b.penalized_margin[i]) << ',' << csv::num(b.simple_weight) << '\n';
}

inline void write_composition_csv(std::ostream& out, const ExperimentResult& r) {
  out << "trial,scheme,round,size,a_count,a_proportion,a_mean_length,b_count,b_proportion,b_mean_length,mean_length\n";
  for (const auto& t : r.trials)
    for (const auto& tr : t.schemes)
      for (const auto& b : tr.batches) {
        if (!b.composition) continue;
        const auto& c = *b.composition;
        out << t.trial_index << ',' << csv::field(tr.scheme) << ',' << b.round << ',' << c.size << ',' << c.a.count << ','
            << csv::num(c.a.proportion) << ',' << csv::num(c.a.mean_length) << ',' << c.b.count << ',' << csv::num(c.b.proportion) << ','
            << csv::num(c.b.mean_length) << ',' << csv::num(c.mean_length) << '\n';
      }
}

inline void write_events_csv(std::ostream& out, const ExperimentResult& r) {
  out << "trial,scheme,round,event,entries_touched,touched_fraction,labels_flipped\n";
  for (const auto& t : r.trials)
    for (const auto& tr : t.schemes)
      for (const auto& e : tr.events) {
        out << t.trial_index << ',' << csv::field(tr.scheme) << ',' << e.round << ',' << csv::field(e.description) << ',';
        if (e.revision) out << e.revision->entries_touched << ',' << csv::num(e.revision->sentences_touched_fraction) << ',' << e.revision->labels_flipped_count;
        else out << ",,";
        out << '\n';
      }
}

// ---------------------------------------------------------------------------
// Trial records

inline nlohmann::json to_json(const TrialResult& t) {
  nlohmann::json j;
  j["trial"] = t.trial_index;
  j["holdout_ids"] = t.holdout_ids;
  j["seed_ids"] = t.seed_ids;
  j["schemes"] = nlohmann::json::array();
  for (const auto& s : t.schemes) {
    nlohmann::json js;
    js["scheme"] = s.scheme;
    for (std::size_t i = 0; i < s.curve.size(); ++i)
      js["curve"].push_back({{"training_size", s.curve.points[i].training_size},
                             {"metric", s.curve.points[i].value},
                             {"eval_model", to_string(s.eval_kinds[i])},
                             {"retained_size", s.retained_sizes[i]}});
    js["batches"] = nlohmann::json::array();
    for (const auto& b : s.batches) {
      nlohmann::json jb{{"round", b.round}, {"ids", b.ids}};
      if (b.simple_weight) jb["simple_weight"] = *b.simple_weight;
      js["batches"].push_back(std::move(jb));
    }
    js["events"] = nlohmann::json::array();
    for (const auto& e : s.events) js["events"].push_back({{"round", e.round}, {"event", e.description}});
    j["schemes"].push_back(std::move(js));
  }
  return j;
}

// Reads back the curve, ids and batch selections; margins are in batches.csv.
inline TrialResult trial_from_json(const nlohmann::json& j) {
  TrialResult t;
  t.trial_index = j.at("trial").get<std::size_t>();
  t.holdout_ids = j.at("holdout_ids").get<std::vector<std::int64_t>>();
  t.seed_ids = j.at("seed_ids").get<std::vector<std::int64_t>>();
  for (const auto& js : j.at("schemes")) {
    SchemeTrace s;
    s.scheme = js.at("scheme").get<std::string>();
    for (const auto& p : js.at("curve")) {
      s.curve.points.push_back({p.at("training_size").get<std::int64_t>(), p.at("metric").get<double>()});
      const auto kind = parse_model_kind(p.at("eval_model").get<std::string>());
      if (!kind) throw data_error("trial record: unknown eval_model");
      s.eval_kinds.push_back(*kind);
      s.retained_sizes.push_back(p.at("retained_size").get<std::size_t>());
    }
    for (const auto& jb : js.at("batches")) {
      BatchRecord b;
      b.round = jb.at("round").get<int>();
      b.ids = jb.at("ids").get<std::vector<std::int64_t>>();
      if (jb.contains("simple_weight")) b.simple_weight = jb["simple_weight"].get<double>();
      s.batches.push_back(std::move(b));
    }
    for (const auto& je : js.at("events")) s.events.push_back({je.at("round").get<int>(), je.at("event").get<std::string>(), std::nullopt});
    t.schemes.push_back(std::move(s));
  }
  return t;
}

inline void write_trials_jsonl(std::ostream& out, const ExperimentResult& r) {
  for (const auto& t : r.trials) out << to_json(t).dump() << '\n';
}

inline std::string format_progress(const ProgressLine& p) {
  std::ostringstream os;
  os << "trial=" << p.trial << " scheme=" << p.scheme << " round=" << p.round << " metric=" << detail::format_double(p.metric)
     << " batch=" << p.batch_size << " elapsed=" << detail::format_double(std::round(p.elapsed_seconds * 1000) / 1000) << "s";
  return os.str();
}

// ---------------------------------------------------------------------------
// Output directory

inline std::string config_hash(const nlohmann::json& config) {
  const auto text = config.dump();  // keys are sorted, so this is canonical
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw error("cannot write '" + p.string() + "'");
  return f;
}

inline std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw error("cannot create output directory '" + dir.string() + "'");
  const auto probe = dir / ".alsim_write_test";
  {
    std::ofstream f(probe);
    if (!f) throw error("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
  return dir;
}

}  // namespace detail

struct RunManifest {
  std::string config_hash;
  std::uint64_t base_seed = 0;
  std::size_t trials = 0;
  std::size_t jobs = 1;
  double wall_seconds = 0;
  std::vector<std::string> files;
  nlohmann::json fitted_schedules = nlohmann::json::object();
};

// Writes every table and the manifest into `dir`; returns the file names.
inline std::vector<std::string> write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& c, const ExperimentResult& r,
                                                  RunManifest manifest) {
  detail::prepare_dir(dir);
  const auto agg = aggregate_rows(c, r);
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, auto&& writer) {
    auto f = detail::open_output(dir / name);
    writer(f);
    if (!f) throw error("write failed: " + (dir / name).string());
    files.push_back(name);
  };
  emit("curves.csv", [&](std::ostream& o) { write_curves_csv(o, r); });
  emit("aggregate.csv", [&](std::ostream& o) { write_aggregate_csv(o, agg); });
  emit("gains.csv", [&](std::ostream& o) { write_gains_csv(o, gain_rows(c, agg)); });
  emit("batches.csv", [&](std::ostream& o) { write_batches_csv(o, r); });
  emit("composition.csv", [&](std::ostream& o) { write_composition_csv(o, r); });
  emit("events.csv", [&](std::ostream& o) { write_events_csv(o, r); });
  emit("trials.jsonl", [&](std::ostream& o) { write_trials_jsonl(o, r); });

  manifest.files = files;
  nlohmann::json m{{"config_hash", manifest.config_hash}, {"base_seed", manifest.base_seed}, {"trials", manifest.trials},
                   {"jobs", manifest.jobs},           {"wall_seconds", manifest.wall_seconds}, {"files", manifest.files},
                   {"fitted_schedules", manifest.fitted_schedules}};
  emit("manifest.json", [&](std::ostream& o) { o << m.dump(2) << '\n'; });
  return files;
}

// ---------------------------------------------------------------------------
// gnuplot

struct PlotFiles {
  std::filesystem::path data, script;
  std::size_t blocks = 0;
  bool bands = false;
};

// Columns per block: round training_size metric_mean ci_lo ci_hi half_width.
// Missing bands are written as NaN, which gnuplot skips.
inline PlotFiles emit_plot_data(const std::vector<AggregateRow>& rows, const std::filesystem::path& dir) {
  if (rows.empty()) throw data_error("plot: aggregate has no rows");
  detail::prepare_dir(dir);
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.scheme) == order.end()) order.push_back(r.scheme);

  PlotFiles out{dir / "curves.dat", dir / "curves.gp", order.size(), false};
  for (const auto& r : rows) out.bands = out.bands || r.ci_lo.has_value();
  {
    auto f = detail::open_output(out.data);
    for (std::size_t b = 0; b < order.size(); ++b) {
      if (b) f << "\n\n";
      f << "# " << order[b] << '\n';
      f << "# round training_size metric_mean ci_lo ci_hi half_width\n";
      for (const auto& r : rows) {
        if (r.scheme != order[b]) continue;
        auto nan_or = [](const std::optional<double>& v) { return v ? ::alsim::detail::format_double(*v) : std::string("NaN"); };
        const std::optional<double> half = r.ci_hi ? std::optional<double>((*r.ci_hi - *r.ci_lo) / 2) : std::nullopt;
        f << r.round << ' ' << r.training_size << ' ' << ::alsim::detail::format_double(r.metric_mean) << ' ' << nan_or(r.ci_lo) << ' '
          << nan_or(r.ci_hi) << ' ' << nan_or(half) << '\n';
      }
    }
  }
  {
    auto f = detail::open_output(out.script);
    const auto data_name = out.data.filename().string();
    f << "set terminal pngcairo size 900,600\n"
      << "set output 'curves.png'\n"
      << "set datafile missing NaN\n"
      << "set key bottom right\n"
      << "set xlabel 'labeled examples'\n"
      << "set ylabel 'metric'\n"
      << "plot \\\n";
    for (std::size_t b = 0; b < order.size(); ++b) {
      const auto color = std::to_string(b + 1);
      f << "  '" << data_name << "' index " << b << " using 2:3 with lines dt 1 lw 2 lc " << color << " title '" << order[b] << "'";
      if (out.bands) {
        f << ", \\\n  '" << data_name << "' index " << b << " using 2:4 with lines dt 2 lc " << color << " notitle";
        f << ", \\\n  '" << data_name << "' index " << b << " using 2:5 with lines dt 2 lc " << color << " notitle";
      }
      f << (b + 1 < order.size() ? ", \\\n" : "\n");
    }
  }
  return out;
}

}  // namespace alsim
