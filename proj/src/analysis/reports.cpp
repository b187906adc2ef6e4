#include <cmath>
#include <sstream>

#include "peavs/analysis.hpp"
#include "peavs/textio.hpp"

namespace peavs::analysis {

using textio::format_double;

DistortionReport per_distortion_report(std::span<const ScoredClip> clips) {
  std::map<SetKey, ReportRow> rows;
  for (const auto& c : clips) {
    auto& r = rows[c.key];
    r.key = c.key;
    r.mean_metric += c.metric;
    r.mean_human += c.human;
    ++r.n;
  }
  DistortionReport out;
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_kind;
  for (auto& [key, r] : rows) {
    r.mean_metric /= static_cast<double>(r.n);
    r.mean_human /= static_cast<double>(r.n);
    by_kind[key.kind].first.push_back(r.mean_metric);
    by_kind[key.kind].second.push_back(r.mean_human);
    out.rows.push_back(r);
  }
  for (const auto& [kind, v] : by_kind) {
    KindCorrelation kc{kind, std::nullopt, std::nullopt};
    try {
      kc.pearson = pearson(v.first, v.second);
    } catch (const Error& e) {
      kc.error = e.code();
    }
    out.per_kind.push_back(kc);
  }
  return out;
}

std::map<std::pair<int, int>, std::vector<double>> abs_diff_analysis(std::span<const PairTask> tasks) {
  std::map<std::pair<int, int>, std::vector<double>> out;
  const int shift = static_cast<int>(distort::Kind::AudioShift);
  for (const auto& t : tasks) {
    if (t.left_kind == t.right_kind || t.left_kind == shift || t.right_kind == shift) continue;
    out[{std::min(t.left_kind, t.right_kind), std::max(t.left_kind, t.right_kind)}].push_back(
        std::abs(t.left_score - t.right_score));
  }
  return out;
}

std::string set_level_csv(std::span<const ScoredClip> clips, const SetLevelResult& r) {
  std::string out = "video_id,kind,level_index,metric,human\n";
  for (const auto& c : clips) {
    out += textio::csv_field(c.video_id) + ',' + std::to_string(c.key.kind) + ',' + std::to_string(c.key.level_index) +
           ',' + format_double(c.metric) + ',' + format_double(c.human) + '\n';
  }
  out += "# set_pcc=" + format_double(r.set_pcc) + " clip_pcc=" + format_double(r.clip_pcc) +
         " sets=" + std::to_string(r.n_sets) + " clips=" + std::to_string(r.n_clips) + '\n';
  return out;
}

std::string report_csv(const DistortionReport& report) {
  std::string out = "kind,level_index,mean_metric,mean_human,n\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.key.kind) + ',' + std::to_string(r.key.level_index) + ',' + format_double(r.mean_metric) +
           ',' + format_double(r.mean_human) + ',' + std::to_string(r.n) + '\n';
  }
  return out;
}

std::string report_summary(const DistortionReport& report) {
  std::ostringstream os;
  for (const auto& k : report.per_kind) {
    os << "kind " << k.kind << " (" << distort::kind_name(distort::kind_from_id(k.kind)) << "): ";
    if (k.pearson) {
      os << "pearson " << format_double(*k.pearson);
    } else {
      os << "undefined (" << errc_name(*k.error) << ")";
    }
    os << '\n';
  }
  return os.str();
}

std::string abs_diff_csv(const std::map<std::pair<int, int>, std::vector<double>>& diffs) {
  std::string out = "kind_a,kind_b,abs_diff\n";
  for (const auto& [key, values] : diffs) {
    for (double d : values) out += std::to_string(key.first) + ',' + std::to_string(key.second) + ',' + format_double(d) + '\n';
  }
  return out;
}

std::string confusion_summary(const BinaryEval& e) {
  std::ostringstream os;
  os << "tp=" << e.matrix.tp << " fn=" << e.matrix.fn << " fp=" << e.matrix.fp << " tn=" << e.matrix.tn
     << " accuracy=" << format_double(e.accuracy) << '\n';
  return os.str();
}

}  // namespace peavs::analysis
