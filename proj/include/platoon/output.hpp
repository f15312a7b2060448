#pragma once

// Plot-ready delimited text tables and the JSON run summary. All numbers are
// written in shortest round-trip form; every table starts with a header row
// naming each column and its unit.

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platoon/config.hpp"
#include "platoon/scenario.hpp"
#include "platoon/stability.hpp"

namespace platoon {

inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  os << "t[s]";
  for (std::size_t i = 0; i < log.vehicles(); ++i) {
    const auto n = std::to_string(i);
    os << ",p" << n << "[m],v" << n << "[m/s],a" << n << "[m/s^2],u" << n << "[m/s^2]";
    if (i > 0) os << ",e" << n << "[m]";
  }
  os << '\n';
  for (std::size_t k = 0; k < log.rows(); ++k) {
    os << format_number(log.t(k));
    const auto row = log.row(k);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& s = row[i];
      os << ',' << format_number(s.p) << ',' << format_number(s.v) << ',' << format_number(s.a)
         << ',' << format_number(s.u);
      if (i > 0) os << ',' << format_number(s.e);
    }
    os << '\n';
  }
}

inline void write_metrics_csv(std::ostream& os, const Metrics& m) {
  os << "follower[-],peak_abs_error[m],peak_time[s],rms_error[m],final_error[m],"
        "window_peak[m],window_peak_ratio[-]\n";
  for (std::size_t f = 0; f < m.followers.size(); ++f) {
    const auto& fm = m.followers[f];
    os << f + 1 << ',' << format_number(fm.peak_abs_error) << ',' << format_number(fm.peak_time)
       << ',' << format_number(fm.rms_error) << ',' << format_number(fm.final_error) << ','
       << format_number(fm.window_peak) << ',';
    // Ratio to the preceding follower; empty for the first one.
    if (f > 0) os << format_number(m.peak_ratios[f - 1]);
    os << '\n';
  }
}

struct ConditionRow {
  std::string name;
  double value;
  std::string relation;
  double bound;
  bool pass;
};

inline std::vector<ConditionRow> condition_rows(const StabilityReport& rep) {
  const auto& in = rep.internal;
  const auto& g = rep.params.gains;
  const auto& sc = rep.string_conditions;
  std::vector<ConditionRow> rows{
      {"internal.kp_positive", g.kp, ">", 0.0, in.kp_positive},
      {"internal.ka_positive", g.ka, ">", 0.0, in.ka_positive},
      {"internal.nonsingular", in.nonsingular_value, "!=", 0.0, in.nonsingular},
      {"internal.damping", in.damping_lhs, ">=", in.damping_rhs, in.damping},
      {"internal.delay_bound", in.delay_lhs, "<", 1.0, in.delay_bound},
      {"string.headway_damping", sc.headway_damping, ">=", 0.0, sc.headway_damping >= 0.0},
      {"string.headway_delay", -sc.headway_delay, "<=", 0.0, sc.headway_delay >= 0.0},
      {"string.accel_gain", -sc.accel_gain, "<=", 0.0, sc.accel_gain >= 0.0},
      {"string.delay_accel", sc.delay_accel, ">=", 0.0, sc.delay_accel >= 0.0},
      {"string.combined", sc.combined, ">=", 0.0, sc.combined >= 0.0},
  };
  for (std::size_t l = 0; l < sc.per_link.size(); ++l) {
    rows.push_back({"string.per_link_l" + std::to_string(l + 1), sc.per_link[l], ">=", 0.0,
                    sc.per_link[l] >= 0.0});
  }
  rows.push_back({"string.min_headway", rep.params.h, ">=", rep.h_min, rep.headway_ok});
  const double bound = 1.0 / static_cast<double>(rep.params.r);
  for (std::size_t l = 0; l < rep.hinf.size(); ++l) {
    rows.push_back({"string.hinf_l" + std::to_string(l + 1), rep.hinf[l].value, "<=", bound,
                    rep.hinf[l].value <= bound + kNormSlack});
  }
  return rows;
}

inline void write_stability_csv(std::ostream& os, const StabilityReport& rep) {
  os << "condition[-],value[-],relation[-],bound[-],pass[-]\n";
  for (const auto& row : condition_rows(rep)) {
    os << row.name << ',' << format_number(row.value) << ',' << row.relation << ','
       << format_number(row.bound) << ',' << (row.pass ? 1 : 0) << '\n';
  }
}

inline nlohmann::json stability_json(const StabilityReport& rep) {
  nlohmann::json j;
  j["internal_ok"] = rep.internal_ok();
  j["string_ok"] = rep.string_ok();
  j["swept_ok"] = rep.swept_ok;
  j["certified"] = rep.certified();
  j["h_min"] = rep.h_min;
  j["delay_bound_lhs"] = rep.internal.delay_lhs;
  auto& norms = j["hinf"] = nlohmann::json::array();
  for (std::size_t l = 0; l < rep.hinf.size(); ++l) {
    norms.push_back({{"l", l + 1}, {"norm", rep.hinf[l].value}, {"omega", rep.hinf[l].omega}});
  }
  auto& conds = j["conditions"] = nlohmann::json::array();
  for (const auto& row : condition_rows(rep)) {
    conds.push_back({{"name", row.name},
                     {"value", row.value},
                     {"relation", row.relation},
                     {"bound", row.bound},
                     {"pass", row.pass}});
  }
  return j;
}

inline void write_freq_csv(std::ostream& os, const FrequencyResponse& fr) {
  const std::size_t r = fr.magnitudes.size();
  os << "omega[rad/s]";
  for (std::size_t l = 1; l <= r; ++l) os << ",H" << l << "[-]";
  os << ",bound[-]\n";
  const std::string bound = format_number(1.0 / static_cast<double>(r));
  for (std::size_t k = 0; k < fr.omegas.size(); ++k) {
    os << format_number(fr.omegas[k]);
    for (std::size_t l = 0; l < r; ++l) os << ',' << format_number(fr.magnitudes[l][k]);
    os << ',' << bound << '\n';
  }
}

inline void write_region_csv(std::ostream& os, const std::vector<RegionPoint>& pts) {
  os << "tau[s],h[s],delta[s],r[-],kp[1/s^2],kv[1/s],ka[-],internal_ok[-],conditions_ok[-],"
        "headway_ok[-],certified[-],swept_ok[-]\n";
  for (const auto& pt : pts) {
    const auto& p = pt.params;
    os << format_number(p.tau) << ',' << format_number(p.h) << ',' << format_number(p.delta) << ','
       << p.r << ',' << format_number(p.gains.kp) << ',' << format_number(p.gains.kv) << ','
       << format_number(p.gains.ka) << ',' << int{pt.internal_ok} << ',' << int{pt.conditions_ok}
       << ',' << int{pt.headway_ok} << ',' << int{pt.certified} << ',';
    if (pt.swept_ok >= 0) os << pt.swept_ok;
    os << '\n';
  }
}

}  // namespace platoon
