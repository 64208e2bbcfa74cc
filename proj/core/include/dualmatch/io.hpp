#pragma once

#include <string>
#include <vector>

#include "dualmatch/experiment.hpp"
#include "dualmatch/offline.hpp"
#include "dualmatch/types.hpp"

namespace dualmatch {

// Instance config JSON:
//   {m, l, T, rho, epsilon, alpha, gamma, service_mode, n_bar,
//    arrival: {kind, ...params} | {kind: "trace", path}}
// rho may be a scalar, a length-m array, or an m x l matrix.
Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

// Results CSV: path,algo,reward,overalloc,avg_backlog,objective,stopping_time
void write_results_csv(const std::string& path, const std::vector<RunTableRow>& rows);

// Regret CSV: path,opt,algo,alg_value,regret
void write_regret_csv(const std::string& path, const std::vector<RegretEstimate>& estimates);

// Offline solution (value, G_T flag, duals) as JSON.
void write_certificate_json(const std::string& path, const Instance& inst,
                            const OfflineSolution& sol);

}  // namespace dualmatch
