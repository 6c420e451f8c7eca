#include <fstream>
#include <cstdio>

#include "presort/csv.hpp"
#include "presort/error.hpp"
#include "presort/pipeline.hpp"

namespace presort {

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_relabel_csv(const std::vector<RelabelRecord>& records, const fs::path& path) {
  auto out = open_out(path);
  out << "clip_id,segment_index,old_label,new_label,background_probability\n";
  char prob[32];
  for (const auto& r : records) {
    std::snprintf(prob, sizeof prob, "%.6f", r.background_probability);
    out << csv::escape(r.clip_id) << ',' << r.segment_index << ',' << r.old_label << ',' << r.new_label << ','
        << prob << '\n';
  }
}

nlohmann::json to_json(const Evaluation& e) {
  const auto& space = e.confusion.label_space();
  nlohmann::json j;
  j["accuracy"] = e.accuracy;
  j["uar"] = e.uar ? nlohmann::json(*e.uar) : nlohmann::json(nullptr);
  j["total"] = e.confusion.total();
  nlohmann::json recall = nlohmann::json::object();
  for (std::size_t c = 0; c < e.recall.size(); ++c) recall[space.name(c)] = e.recall[c];
  j["recall"] = recall;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < e.confusion.size(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < e.confusion.size(); ++p) row.push_back(e.confusion(t, p));
    rows.push_back(row);
  }
  j["labels"] = space.names();
  j["confusion"] = rows;
  if (e.f1) {
    j["f1"] = {{"f1", e.f1->f1},
               {"precision", e.f1->precision},
               {"recall", e.f1->recall},
               {"degenerate", e.f1->degenerate}};
  }
  return j;
}

void write_report(const ExperimentReport& report, const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  open_out(out_dir / "report.json") << report.json.dump(2) << '\n';
  open_out(out_dir / "config.ini") << to_ini(cfg);
  write_relabel_csv(report.relabels, out_dir / "relabels.csv");
  for (const auto& [view, cm] : report.test_confusions) {
    write_confusion_csv(cm, out_dir / ("confusion_" + view + ".csv"));
    write_confusion_pgm(cm, out_dir / ("confusion_" + view + ".pgm"));
  }
  if (report.binary_mismatch) write_mismatch_csv(*report.binary_mismatch, out_dir / "mismatch.csv");
}

nlohmann::json strip_timing(nlohmann::json report) {
  if (report.is_object()) {
    report.erase("timestamp");
    report.erase("wall_clock_s");
    report.erase("host");
    for (auto& [key, value] : report.items()) value = strip_timing(value);
  } else if (report.is_array()) {
    for (auto& value : report) value = strip_timing(value);
  }
  return report;
}

}  // namespace presort
