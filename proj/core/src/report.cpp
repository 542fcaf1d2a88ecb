#include "dadnn/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dadnn/errors.hpp"

namespace dadnn::harness {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct MethodRows {
  std::string name;
  std::string variant;
  std::vector<const RunRecord*> runs;
};

std::vector<MethodRows> group(const std::vector<RunRecord>& records) {
  std::vector<MethodRows> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MethodRows& m) { return m.name == r.spec_name; });
    if (it == out.end()) {
      out.push_back({r.spec_name, r.variant, {}});
      it = std::prev(out.end());
    }
    it->runs.push_back(&r);
  }
  return out;
}

std::optional<double> scene_median(const MethodRows& m, int scene, bool want_auc) {
  std::vector<double> v;
  for (const auto* r : m.runs)
    if (const auto* s = r->final_report.scene(scene)) {
      const auto& x = want_auc ? s->auc : s->calibration;
      if (x) v.push_back(*x);
    }
  if (v.empty()) return std::nullopt;
  return median(v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("error writing " + path.string());
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ComparisonTable build_comparison(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("report needs at least one run record");
  ComparisonTable t;
  const auto methods = group(records);
  for (const auto& r : records)
    for (const auto& s : r.final_report.scenes)
      if (std::find(t.scene_ids.begin(), t.scene_ids.end(), s.scene_id) == t.scene_ids.end())
        t.scene_ids.push_back(s.scene_id);
  std::sort(t.scene_ids.begin(), t.scene_ids.end());

  std::ostringstream csv;
  csv << "method,variant,seeds";
  for (int k : t.scene_ids) csv << ",auc_scene" << k << ",calibration_scene" << k;
  csv << ",gauc,parameter_count,wall_clock_s\n";

  std::ostringstream sum;
  sum << "Median over seeds; AUC / calibration per scene.\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-14s %5s", "method", "variant", "seeds");
  sum << line;
  for (int k : t.scene_ids) {
    std::snprintf(line, sizeof line, "  %15s", ("scene " + std::to_string(k)).c_str());
    sum << line;
  }
  sum << "     GAUC     params  seconds\n";

  for (const auto& m : methods) {
    t.methods.push_back(m.name);
    std::vector<double> g, params, secs;
    for (const auto* r : m.runs) {
      g.push_back(r->final_report.gauc);
      params.push_back(static_cast<double>(r->parameter_count));
      secs.push_back(r->wall_clock_seconds);
    }
    csv << m.name << ',' << m.variant << ',' << m.runs.size();
    std::snprintf(line, sizeof line, "%-24s %-14s %5zu", m.name.c_str(), m.variant.c_str(),
                  m.runs.size());
    sum << line;
    for (int k : t.scene_ids) {
      const auto a = scene_median(m, k, true);
      const auto c = scene_median(m, k, false);
      csv << ',' << (a ? fixed(*a, 6) : "") << ',' << (c ? fixed(*c, 6) : "");
      const std::string cell = (a ? fixed(*a, 4) : "-") + " / " + (c ? fixed(*c, 3) : "-");
      std::snprintf(line, sizeof line, "  %15s", cell.c_str());
      sum << line;
    }
    const double gm = median(g);
    const double pm = median(params);
    const double sm = median(secs);
    csv << ',' << fixed(gm, 6) << ',' << fixed(pm, 0) << ',' << fixed(sm, 3) << '\n';
    std::snprintf(line, sizeof line, "  %7.4f %10.0f %8.2f\n", gm, pm, sm);
    sum << line;
  }
  t.csv = csv.str();
  t.summary = sum.str();
  return t;
}

void write_report(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  const auto table = build_comparison(records);
  std::filesystem::create_directories(dir);
  write_text(dir / "comparison.csv", table.csv);
  write_text(dir / "summary.txt", table.summary);

  std::ostringstream curves;
  curves << "method,seed,epoch,gauc,log_loss\n";
  for (const auto& r : records)
    for (const auto& p : r.series)
      curves << r.spec_name << ',' << r.seed << ',' << p.epoch << ',' << fixed(p.report.gauc, 6)
             << ',' << fixed(p.report.log_loss, 6) << '\n';
  write_text(dir / "curves.csv", curves.str());
}

void save_record(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << record.to_json().dump() << '\n';
}

std::vector<RunRecord> load_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(f.string() + ":" + std::to_string(n) + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError(f.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  }
  if (out.empty()) throw ConfigError("no run records (*.jsonl) in " + dir.string());
  return out;
}

}  // namespace dadnn::harness
