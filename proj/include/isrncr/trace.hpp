#pragma once

#include "isrncr/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace isrncr {

/// Column order of the trace CSV.
inline constexpr const char *kTraceHeader =
    "iter,f,grad_norm,sigma,rho,accepted,inner_iters,oracle_calls,wall_ms,"
    "cauchy_ok,eigenstep_ok,submodel_grad_ok,agm_ok";

/// 17 significant digits; "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

/// Writes header plus one row per record. Diagnostic flags are 1/0, or -1
/// when diagnostics were not evaluated.
void write_trace_csv(std::ostream &out, const std::vector<IterationRecord> &records);
void write_trace_csv(const std::string &path, const std::vector<IterationRecord> &records);

/// Inverse of write_trace_csv for every column it writes. Throws UsageError
/// on malformed input.
std::vector<IterationRecord> read_trace_csv(std::istream &in);
std::vector<IterationRecord> read_trace_csv(const std::string &path);

} // namespace isrncr
