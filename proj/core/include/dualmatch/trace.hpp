#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualmatch/types.hpp"

namespace dualmatch {

// An externally supplied arrival sequence, optionally with recorded
// service availabilities. CSV layout (header included):
//   t,target,w_1,...,w_m[,n_1_1,...,n_m_l][,s_1,...,s_m]
// with l > 1 service columns named s_i_j.
struct Trace {
  int m = 1;
  int l = 1;
  std::vector<ArrivalType> arrivals;
  std::vector<Grid> services;  // empty if the file has no service columns

  int length() const { return static_cast<int>(arrivals.size()); }
  bool has_services() const { return !services.empty(); }
};

Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

}  // namespace dualmatch
