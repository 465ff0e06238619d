#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ppsd/engine.hpp"
#include "ppsd/privacy.hpp"

namespace ppsd {

// Full-precision decimal formatting (17 significant digits) so re-runs from
// the same config and seed reproduce artifacts byte for byte.
std::string format_double(double v);

// Columns: k,residual,tracking_residual,consensus_err,opt_gap,grad_est_err.
std::string run_csv(const RunRecord& rec);

// Config echo, seed, stop reason, fitted rate when available.
nlohmann::json run_sidecar(const RunRecord& rec, const nlohmann::json& config_echo);

std::string compare_csv(const RunRecord& a, const RunRecord& b);

std::string attacker_log_csv(const AttackerLog& log);

// Writes via a temp file plus rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace ppsd
