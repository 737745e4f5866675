#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "proxycast/harness.hpp"
#include "proxycast/stats.hpp"

namespace proxycast {

// Fixed numeric formatting so equal configs produce byte-identical files.
inline std::string format_double(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Schema: forecaster,round,mean_loss,loss_ci95,mean_regret,regret_ci95,std_regret
// with one row per (forecaster, round). loss_smoothing_window > 1 emits a
// centered moving average of the loss mean (the regret columns are never
// smoothed).
inline void write_run_csv(std::ostream& out, const ExperimentResult& result,
                          int loss_smoothing_window = 1) {
  out << "forecaster,round,mean_loss,loss_ci95,mean_regret,regret_ci95,std_regret\n";
  for (const auto& s : result.series) {
    const std::vector<double> loss = smooth_series(s.mean_loss, loss_smoothing_window);
    const std::vector<double> loss_ci = smooth_series(s.loss_ci95, loss_smoothing_window);
    for (std::size_t i = 0; i < result.rounds.size(); ++i) {
      out << s.name << "," << result.rounds[i] << "," << format_double(loss[i]) << ","
          << format_double(loss_ci[i]) << "," << format_double(s.mean_regret[i]) << ","
          << format_double(s.regret_ci95[i]) << "," << format_double(s.std_regret[i]) << "\n";
    }
  }
}

// Schema: forecaster,param,final_mean_regret,final_ci95
inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "forecaster,param,final_mean_regret,final_ci95\n";
  for (const auto& r : rows) {
    out << r.forecaster << "," << format_double(r.param) << ","
        << format_double(r.final_mean_regret) << "," << format_double(r.final_ci95) << "\n";
  }
}

inline void write_matrix_csv(std::ostream& out,
                             const std::vector<std::vector<double>>& matrix) {
  for (const auto& row : matrix) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << format_double(row[c], "%.17g");
    }
    out << "\n";
  }
}

}  // namespace proxycast
