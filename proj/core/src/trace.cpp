#include "dualmatch/trace.hpp"

#include <fstream>
#include <sstream>

#include "dualmatch/csv.hpp"

namespace dualmatch {

namespace {

struct Header {
  int m = 0;
  int l = 0;
  bool has_consumption = false;
  bool has_services = false;
};

Header parse_header(const std::vector<std::string_view>& cols) {
  Header h;
  if (cols.size() < 3 || cols[0] != "t" || cols[1] != "target")
    throw std::runtime_error("trace header must start with t,target,w_1,...");
  size_t k = 2;
  while (k < cols.size() && cols[k].starts_with("w_")) ++k, ++h.m;
  if (h.m == 0) throw std::runtime_error("trace header has no reward columns");
  size_t n_cols = 0;
  while (k < cols.size() && cols[k].starts_with("n_")) ++k, ++n_cols;
  size_t s_cols = 0;
  while (k < cols.size() && cols[k].starts_with("s_")) ++k, ++s_cols;
  if (k != cols.size()) throw std::runtime_error("unrecognized trace columns");
  if (n_cols > 0) {
    if (n_cols % h.m != 0) throw std::runtime_error("consumption columns must be m*l");
    h.l = static_cast<int>(n_cols) / h.m;
    h.has_consumption = true;
  } else {
    h.l = 1;
  }
  if (s_cols > 0) {
    if (s_cols != static_cast<size_t>(h.m) * h.l)
      throw std::runtime_error("service columns must be m (or m*l) wide");
    h.has_services = true;
  }
  return h;
}

}  // namespace

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("no rows in trace file: " + path);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  Header h = parse_header(csv::split(line));

  Trace trace;
  trace.m = h.m;
  trace.l = h.l;
  int expected_t = 1;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    auto cols = csv::split(line);
    size_t want = 2 + h.m + (h.has_consumption ? h.m * h.l : 0) +
                  (h.has_services ? h.m * h.l : 0);
    if (cols.size() != want) {
      std::ostringstream msg;
      msg << "row " << expected_t << ": expected " << want << " fields, got " << cols.size();
      throw std::runtime_error(msg.str());
    }
    long t = csv::parse_long(cols[0]);
    if (t != expected_t) {
      std::ostringstream msg;
      msg << "row " << expected_t << ": period column is " << t;
      throw std::runtime_error(msg.str());
    }
    ArrivalType a;
    long target = csv::parse_long(cols[1]);
    if (target < 0 || target > h.m) {
      std::ostringstream msg;
      msg << "row " << expected_t << ": target " << target << " out of range 0.." << h.m;
      throw std::runtime_error(msg.str());
    }
    a.target = static_cast<int>(target);
    a.reward.resize(h.m);
    size_t k = 2;
    for (int i = 0; i < h.m; ++i) {
      a.reward[i] = csv::parse_double(cols[k++]);
      if (a.reward[i] < 0.0 || a.reward[i] > 1.0) {
        std::ostringstream msg;
        msg << "row " << expected_t << ": reward w_" << i + 1 << " = " << a.reward[i]
            << " outside [0,1]";
        throw std::runtime_error(msg.str());
      }
    }
    if (h.has_consumption) {
      a.consumption = Grid(h.m, h.l);
      for (int i = 0; i < h.m; ++i)
        for (int j = 0; j < h.l; ++j) a.consumption(i, j) = csv::parse_double(cols[k++]);
    }
    trace.arrivals.push_back(std::move(a));
    if (h.has_services) {
      Grid s(h.m, h.l);
      for (int i = 0; i < h.m; ++i)
        for (int j = 0; j < h.l; ++j) s(i, j) = csv::parse_double(cols[k++]);
      trace.services.push_back(std::move(s));
    }
    ++expected_t;
  }
  if (trace.arrivals.empty()) throw std::runtime_error("no rows in trace file: " + path);
  return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);

  const bool has_n = !trace.arrivals.empty() && !trace.arrivals.front().consumption.empty();
  out << "t,target";
  for (int i = 1; i <= trace.m; ++i) out << ",w_" << i;
  if (has_n)
    for (int i = 1; i <= trace.m; ++i)
      for (int j = 1; j <= trace.l; ++j) out << ",n_" << i << "_" << j;
  if (trace.has_services()) {
    for (int i = 1; i <= trace.m; ++i) {
      if (trace.l == 1)
        out << ",s_" << i;
      else
        for (int j = 1; j <= trace.l; ++j) out << ",s_" << i << "_" << j;
    }
  }
  out << "\n";

  for (int t = 1; t <= trace.length(); ++t) {
    const ArrivalType& a = trace.arrivals[t - 1];
    out << t << "," << a.target;
    for (int i = 0; i < trace.m; ++i) out << "," << csv::format_double(a.reward[i]);
    if (has_n)
      for (int i = 0; i < trace.m; ++i)
        for (int j = 0; j < trace.l; ++j) out << "," << csv::format_double(a.consumption(i, j));
    if (trace.has_services()) {
      const Grid& s = trace.services[t - 1];
      for (int i = 0; i < trace.m; ++i)
        for (int j = 0; j < trace.l; ++j) out << "," << csv::format_double(s(i, j));
    }
    out << "\n";
  }
}

}  // namespace dualmatch
