#pragma once

// CSV readers and writers for pulse records and sweep curves.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbs/montecarlo.hpp"

namespace mbs::io {

inline constexpr const char* kRecordsHeader = "setting_id,a_t,a_r,b_t,b_r";
inline constexpr const char* kSweepHeader = "angle_deg,value,std_err,pulses";

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string column, const std::string& what)
      : std::runtime_error(what), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

struct SweepRow {
  double angle_deg = 0.0;
  double value = 0.0;
  double std_err = 0.0;
  long long pulses = 0;
};

/// Floats at 12 significant digits.
std::string format_float(double v);

void write_records(std::ostream& out, const std::vector<mc::PulseRecord>& records);
std::vector<mc::PulseRecord> read_records(std::istream& in);

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep(std::istream& in);

}  // namespace mbs::io
