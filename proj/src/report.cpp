/*
 * Copyright 2026 The crossalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "crossalign/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>

#include "crossalign/error.hpp"

namespace crossalign {

using nlohmann::json;

namespace {

json optional_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void put_losses(json& j, const LossBreakdown& b) {
  j["vae"] = b.vae;
  j["cmfr"] = optional_value(b.cmfr);
  j["cmda"] = optional_value(b.cmda);
  j["vtov"] = optional_value(b.vtov);
  j["vtos"] = optional_value(b.vtos);
  j["stov"] = optional_value(b.stov);
  j["total"] = b.total;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

constexpr std::array<const char*, 7> kTerms = {"vae", "cmfr", "cmda", "vtov", "vtos", "stov", "total"};
constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#17becf"};

std::optional<double> term_of(const LossBreakdown& b, std::size_t t) {
  switch (t) {
    case 0: return b.vae;
    case 1: return b.cmfr;
    case 2: return b.cmda;
    case 3: return b.vtov;
    case 4: return b.vtos;
    case 5: return b.stov;
    default: return b.total;
  }
}

}  // namespace

json metrics_to_json(const Metrics& m) {
  json j;
  if (m.mode == Mode::kZsl) {
    j["zsl_acc"] = m.zsl_accuracy;
    j["zsl_macro"] = m.zsl_macro;
  } else {
    j["S"] = m.seen_accuracy;
    j["U"] = m.unseen_accuracy;
    j["H"] = m.harmonic;
  }
  return j;
}

json experiment_report_json(const ExperimentReport& report, const json& config_echo) {
  json j;
  j["mode"] = mode_name(report.mode);
  j["ratio"] = report.ratio.str();
  j["master_seed"] = report.master_seed;
  j["per_split"] = json::array();
  for (const SplitResult& r : report.per_split) {
    json s = metrics_to_json(r.metrics);
    s["split_index"] = r.split.split_index;
    s["seen"] = r.split.seen;
    s["unseen"] = r.split.unseen;
    json per_class = json::object();
    for (const auto& [cls, acc] : r.metrics.per_class) per_class[std::to_string(cls)] = acc;
    s["per_class"] = per_class;
    j["per_split"].push_back(s);
  }
  j["mean"] = metrics_to_json(report.mean);
  j["std"] = metrics_to_json(report.stddev);
  j["config_echo"] = config_echo;
  return j;
}

json step_log_line(std::size_t split, const StepRecord& record) {
  json j;
  j["kind"] = "step";
  j["split"] = split;
  j["step"] = record.step;
  j["epoch"] = record.epoch;
  put_losses(j, record.losses);
  return j;
}

json epoch_log_line(std::size_t split, const EpochRecord& record) {
  json j;
  j["kind"] = "epoch";
  j["split"] = split;
  j["epoch"] = record.epoch;
  j["steps"] = record.steps;
  put_losses(j, record.mean);
  return j;
}

EpochRecord epoch_from_log_line(const json& line) {
  try {
    EpochRecord r;
    r.epoch = line.at("epoch").get<std::size_t>();
    r.steps = line.value("steps", std::size_t{0});
    r.mean.vae = line.at("vae").get<double>();
    r.mean.cmfr = read_optional(line, "cmfr");
    r.mean.cmda = read_optional(line, "cmda");
    r.mean.vtov = read_optional(line, "vtov");
    r.mean.vtos = read_optional(line, "vtos");
    r.mean.stov = read_optional(line, "stov");
    r.mean.total = line.at("total").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed epoch log record: ") + e.what());
  }
}

json ablation_report_json(const std::vector<AblationRow>& rows, const json& config_echo) {
  json j;
  j["rows"] = json::array();
  for (const AblationRow& r : rows) {
    json row;
    row["variant"] = r.variant.name;
    row["vtov"] = r.variant.vtov;
    row["vtos"] = r.variant.vtos;
    row["stov"] = r.variant.stov;
    row["zsl"] = r.zsl;
    row["gzsl"] = r.gzsl;
    row["zsl_std"] = r.zsl_report.stddev.zsl_accuracy;
    row["gzsl_std"] = r.gzsl_report.stddev.harmonic;
    j["rows"].push_back(row);
  }
  j["config_echo"] = config_echo;
  return j;
}

std::string loss_curve_svg(const std::vector<std::vector<EpochRecord>>& per_split) {
  constexpr int kPanelW = 320, kPanelH = 200, kCols = 3, kPad = 40;
  std::vector<std::size_t> present;
  for (std::size_t t = 0; t < kTerms.size(); ++t) {
    bool any = false;
    for (const auto& h : per_split) {
      for (const auto& e : h) any = any || term_of(e.mean, t).has_value();
    }
    if (any) present.push_back(t);
  }
  const int rows = static_cast<int>((present.size() + kCols - 1) / kCols);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCols * kPanelW << "\" height=\""
     << std::max(1, rows) * kPanelH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t p = 0; p < present.size(); ++p) {
    const std::size_t t = present[p];
    const int x0 = static_cast<int>(p % kCols) * kPanelW;
    const int y0 = static_cast<int>(p / kCols) * kPanelH;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t max_epoch = 1;
    for (const auto& h : per_split) {
      for (const auto& e : h) {
        if (auto v = term_of(e.mean, t)) {
          lo = std::min(lo, *v);
          hi = std::max(hi, *v);
        }
        max_epoch = std::max(max_epoch, e.epoch);
      }
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const double w = kPanelW - 2 * kPad, h = kPanelH - 2 * kPad;
    os << "<g transform=\"translate(" << x0 << ',' << y0 << ")\">\n";
    os << "<text x=\"" << kPad << "\" y=\"" << kPad - 12 << "\">" << kTerms[t] << "</text>\n";
    os << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"2\" y=\"" << kPad + 4 << "\">" << fmt("%.3g", hi) << "</text>\n";
    os << "<text x=\"2\" y=\"" << kPad + h << "\">" << fmt("%.3g", lo) << "</text>\n";
    os << "<text x=\"" << kPad + w - 40 << "\" y=\"" << kPad + h + 14 << "\">epoch " << max_epoch
       << "</text>\n";
    for (std::size_t s = 0; s < per_split.size(); ++s) {
      std::ostringstream pts;
      for (const auto& e : per_split[s]) {
        const auto v = term_of(e.mean, t);
        if (!v) continue;
        const double px = kPad + w * static_cast<double>(e.epoch) / static_cast<double>(max_epoch);
        const double py = kPad + h * (1.0 - (*v - lo) / (hi - lo));
        pts << fmt("%.2f", px) << ',' << fmt("%.2f", py) << ' ';
      }
      os << "<polyline fill=\"none\" stroke=\"" << kPalette[s % kPalette.size()]
         << "\" points=\"" << pts.str() << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string ablation_bar_svg(const json& ablation_report) {
  const json& rows = ablation_report.at("rows");
  constexpr int kGroupW = 90, kBarW = 30, kH = 260, kPad = 40;
  const int width = kPad * 2 + kGroupW * static_cast<int>(rows.size());
  const double plot_h = kH - 2 * kPad;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << width - kPad
     << "\" y2=\"" << kH - kPad << "\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << kPad << "\" y=\"16\">ZSL accuracy (blue), GZSL H (orange)</text>\n";
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const json& r = rows[g];
    const int gx = kPad + static_cast<int>(g) * kGroupW;
    os << "<g class=\"group\" data-variant=\"" << r.at("variant").get<std::string>() << "\">\n";
    const std::array<std::pair<const char*, const char*>, 2> bars = {
        std::pair{"zsl", "#1f77b4"}, std::pair{"gzsl", "#ff7f0e"}};
    for (std::size_t b = 0; b < bars.size(); ++b) {
      const double v = std::clamp(r.at(bars[b].first).get<double>(), 0.0, 1.0);
      const double bh = plot_h * v;
      os << "<rect x=\"" << gx + 10 + static_cast<int>(b) * kBarW << "\" y=\""
         << fmt("%.2f", kH - kPad - bh) << "\" width=\"" << kBarW - 4 << "\" height=\""
         << fmt("%.2f", bh) << "\" fill=\"" << bars[b].second << "\"><title>"
         << fmt("%.4f", v) << "</title></rect>\n";
    }
    os << "<text x=\"" << gx + 25 << "\" y=\"" << kH - kPad + 16 << "\">"
       << r.at("variant").get<std::string>() << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string format_experiment_table(const json& report) {
  std::ostringstream os;
  const bool zsl = report.at("mode").get<std::string>() == "zsl";
  os << "mode " << report.at("mode").get<std::string>() << "  ratio "
     << report.at("ratio").get<std::string>() << '\n';
  if (zsl) {
    os << "split    acc       macro\n";
  } else {
    os << "split    S         U         H\n";
  }
  auto line = [&](const std::string& label, const json& m) {
    char buf[128];
    if (zsl) {
      std::snprintf(buf, sizeof buf, "%-8s %-9.4f %-9.4f\n", label.c_str(),
                    m.at("zsl_acc").get<double>(), m.at("zsl_macro").get<double>());
    } else {
      std::snprintf(buf, sizeof buf, "%-8s %-9.4f %-9.4f %-9.4f\n", label.c_str(),
                    m.at("S").get<double>(), m.at("U").get<double>(), m.at("H").get<double>());
    }
    os << buf;
  };
  for (const json& s : report.at("per_split")) {
    line(std::to_string(s.at("split_index").get<std::size_t>()), s);
  }
  line("mean", report.at("mean"));
  line("std", report.at("std"));
  return os.str();
}

std::string format_ablation_table(const json& ablation_report) {
  std::ostringstream os;
  os << "variant  vtov vtos stov  zsl       gzsl\n";
  for (const json& r : ablation_report.at("rows")) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %-4s %-4s %-4s  %-9.4f %-9.4f\n",
                  r.at("variant").get<std::string>().c_str(), r.at("vtov").get<bool>() ? "x" : "-",
                  r.at("vtos").get<bool>() ? "x" : "-", r.at("stov").get<bool>() ? "x" : "-",
                  r.at("zsl").get<double>(), r.at("gzsl").get<double>());
    os << buf;
  }
  return os.str();
}

}  // namespace crossalign
