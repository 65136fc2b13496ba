#include "isrncr/trace.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace isrncr {

namespace {

int flag(const AssumptionReport &d, bool v) { return d.evaluated ? (v ? 1 : 0) : -1; }

double parse_double(const std::string &cell, std::size_t line) {
  const char *begin = cell.c_str();
  char *end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw UsageError("trace line " + std::to_string(line) + ": bad number '" + cell + "'");
  return v;
}

long long parse_int(const std::string &cell, std::size_t line) {
  const char *begin = cell.c_str();
  char *end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw UsageError("trace line " + std::to_string(line) + ": bad integer '" + cell + "'");
  return v;
}

} // namespace

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream &out, const std::vector<IterationRecord> &records) {
  out << kTraceHeader << '\n';
  for (const auto &r : records) {
    const auto &d = r.diag;
    out << r.k << ',' << format_double(r.f_value) << ',' << format_double(r.grad_norm)
        << ',' << format_double(r.sigma) << ',' << format_double(r.rho) << ','
        << (r.accepted ? 1 : 0) << ',' << r.inner_iters << ',' << r.oracle_calls << ','
        << format_double(r.wall_ms) << ',' << flag(d, d.cauchy_ok) << ','
        << flag(d, d.eigenstep_ok) << ',' << flag(d, d.submodel_grad_ok) << ','
        << flag(d, d.agm_ok()) << '\n';
  }
}

void write_trace_csv(const std::string &path, const std::vector<IterationRecord> &records) {
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path + "'");
  write_trace_csv(out, records);
}

std::vector<IterationRecord> read_trace_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw UsageError("trace: missing or unexpected header");
  std::vector<IterationRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (cells.size() != 13)
      throw UsageError("trace line " + std::to_string(lineno) + ": expected 13 columns");
    IterationRecord r;
    r.k = static_cast<int>(parse_int(cells[0], lineno));
    r.f_value = parse_double(cells[1], lineno);
    r.grad_norm = parse_double(cells[2], lineno);
    r.sigma = parse_double(cells[3], lineno);
    r.rho = parse_double(cells[4], lineno);
    r.accepted = parse_int(cells[5], lineno) != 0;
    r.inner_iters = static_cast<int>(parse_int(cells[6], lineno));
    r.oracle_calls = static_cast<std::uint64_t>(parse_int(cells[7], lineno));
    r.wall_ms = parse_double(cells[8], lineno);
    long long flags[4];
    for (int j = 0; j < 4; ++j)
      flags[j] = parse_int(cells[9 + j], lineno);
    r.diag.evaluated = flags[0] >= 0;
    r.diag.cauchy_ok = flags[0] == 1;
    r.diag.eigenstep_ok = flags[1] == 1;
    r.diag.submodel_grad_ok = flags[2] == 1;
    r.diag.agm1_ok = r.diag.agm2_ok = flags[3] == 1;
    out.push_back(r);
  }
  return out;
}

std::vector<IterationRecord> read_trace_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot read '" + path + "'");
  return read_trace_csv(in);
}

} // namespace isrncr
