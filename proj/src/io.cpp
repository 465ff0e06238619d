#include "ppsd/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ppsd/analysis.hpp"

namespace ppsd {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string run_csv(const RunRecord& rec) {
  std::ostringstream os;
  os << "k,residual,tracking_residual,consensus_err,opt_gap,grad_est_err\n";
  for (const auto& row : rec.diagnostics) {
    os << row.k << ',' << format_double(row.residual) << ',' << format_double(row.tracking) << ','
       << format_double(row.consensus_err) << ',' << format_double(row.opt_gap) << ','
       << format_double(row.grad_est_err) << '\n';
  }
  return os.str();
}

nlohmann::json run_sidecar(const RunRecord& rec, const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["config"] = config_echo;
  j["seed"] = rec.config.seed;
  j["algorithm"] = rec.algorithm;
  j["gamma"] = rec.config.gamma;
  j["eta"] = rec.config.eta;
  j["stop_reason"] = rec.stop_reason;
  j["iterations"] = rec.iterations;
  j["final_residual"] = rec.diagnostics.back().residual;
  try {
    std::vector<double> residuals;
    for (const auto& row : rec.diagnostics) residuals.push_back(row.residual);
    RateFit fit = fit_linear_rate(residuals);
    j["rate_fit"] = {{"lambda", fit.lambda},
                     {"c", fit.c},
                     {"rmse", fit.rmse},
                     {"window", {fit.window_begin, fit.window_end}}};
  } catch (const std::exception&) {
    j["rate_fit"] = nullptr;
  }
  return j;
}

std::string compare_csv(const RunRecord& a, const RunRecord& b) {
  std::ostringstream os;
  os << "k,residual_" << a.algorithm << ",residual_" << b.algorithm << "\n";
  const size_t rows = std::max(a.diagnostics.size(), b.diagnostics.size());
  for (size_t k = 0; k < rows; ++k) {
    os << k << ',';
    os << (k < a.diagnostics.size() ? format_double(a.diagnostics[k].residual) : "") << ',';
    os << (k < b.diagnostics.size() ? format_double(b.diagnostics[k].residual) : "") << '\n';
  }
  return os.str();
}

std::string attacker_log_csv(const AttackerLog& log) {
  std::ostringstream os;
  os << "k,label,value\n";
  for (const auto& e : log.entries) {
    os << e.k << ',' << e.label << ',' << format_double(e.value) << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << contents;
  }
  fs::rename(tmp, target);
}

}  // namespace ppsd
