#ifndef ESORL_TRACE_IO_HPP_
#define ESORL_TRACE_IO_HPP_

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "esorl/sim.hpp"

namespace esorl {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// strtod instead of std::stod: stod throws on subnormals, which round-trip
// fine through strtod's ERANGE path.
inline double parse_cell(const std::string& cell, const std::string& path) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) {
    throw std::runtime_error("read_trace: bad number '" + cell + "' in " + path);
  }
  return v;
}

}  // namespace detail

// Column order: t, x, z, xhat, xbar, u, u0_hat, comp, delta_t, a4_c,
// gamma_norm, gamma_lmin, theta_gap, x_np1_true, eta, sat flags.
inline std::vector<std::string> trace_header(int n, int p) {
  std::vector<std::string> h;
  h.push_back("t");
  for (int i = 1; i <= n; ++i) h.push_back("x" + std::to_string(i));
  for (int i = 1; i <= p; ++i) h.push_back("z" + std::to_string(i));
  for (int i = 1; i <= n + 1; ++i) h.push_back("xhat" + std::to_string(i));
  for (int i = 1; i <= n + 1; ++i) h.push_back("xbar" + std::to_string(i));
  h.push_back("u");
  h.push_back("u0_hat");
  h.push_back("comp");
  h.push_back("delta_t");
  h.push_back("a4_c");
  h.push_back("gamma_norm");
  h.push_back("gamma_lmin");
  h.push_back("theta_gap");
  h.push_back("x_np1_true");
  for (int i = 1; i <= n + 1; ++i) h.push_back("eta" + std::to_string(i));
  for (int i = 1; i <= n + 1; ++i) h.push_back("sat" + std::to_string(i));
  return h;
}

inline void write_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);
  const auto header = trace_header(trace.n, trace.p);
  for (size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (const TraceRecord& r : trace.records) {
    std::string line = detail::fmt17(r.t);
    auto app = [&line](double v) { line += ","; line += detail::fmt17(v); };
    for (int i = 0; i < r.x.size(); ++i) app(r.x[i]);
    for (int i = 0; i < r.z.size(); ++i) app(r.z[i]);
    for (int i = 0; i < r.xhat.size(); ++i) app(r.xhat[i]);
    for (int i = 0; i < r.xbar.size(); ++i) app(r.xbar[i]);
    app(r.u);
    app(r.u0_hat);
    app(r.comp);
    app(r.delta_t);
    app(r.a4_c);
    app(r.gamma_norm);
    app(r.gamma_lmin);
    app(r.theta_gap);
    app(r.x_np1_true);
    for (int i = 0; i < r.eta.size(); ++i) app(r.eta[i]);
    for (int f : r.sat_active) { line += ","; line += std::to_string(f); }
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path);
}

// Auxiliary weight history: t plus both weight vectors per record.
inline void write_weights(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_weights: cannot open " + path);
  out << "t";
  for (int i = 1; i <= trace.l; ++i) out << ",theta_v" << i;
  for (int i = 1; i <= trace.l; ++i) out << ",theta_c" << i;
  out << "\n";
  for (const TraceRecord& r : trace.records) {
    std::string line = detail::fmt17(r.t);
    for (int i = 0; i < r.theta_v.size(); ++i) {
      line += ",";
      line += detail::fmt17(r.theta_v[i]);
    }
    for (int i = 0; i < r.theta_c.size(); ++i) {
      line += ",";
      line += detail::fmt17(r.theta_c[i]);
    }
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write_weights: write failed for " + path);
}

struct ParsedTrace {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline ParsedTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace: cannot open " + path);
  ParsedTrace pt;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_trace: empty file " + path);
  }
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) pt.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(detail::parse_cell(cell, path));
    if (row.size() != pt.header.size()) {
      throw std::runtime_error("read_trace: ragged row in " + path);
    }
    pt.rows.push_back(std::move(row));
  }
  return pt;
}

}  // namespace esorl

#endif  // ESORL_TRACE_IO_HPP_
