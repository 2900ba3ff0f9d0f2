#include "mbs/records_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace mbs::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Returns data lines; skips blanks and '#' comments, checks the header.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  bool have_header = false;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    for (auto& f : fields) f = trim(f);
    if (!have_header) {
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c >= fields.size()) throw SchemaError(header[c], fmt::format("missing column '{}'", header[c]));
        if (fields[c] != header[c]) {
          throw SchemaError(header[c], fmt::format("expected column '{}' at position {}, found '{}'", header[c], c + 1,
                                                   fields[c]));
        }
      }
      if (fields.size() > header.size()) {
        throw SchemaError(fields[header.size()], fmt::format("unexpected column '{}'", fields[header.size()]));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      const auto& col = header[std::min(fields.size(), header.size() - 1)];
      throw SchemaError(col, fmt::format("line {}: expected {} fields, found {} (column '{}')", line_no, header.size(),
                                         fields.size(), col));
    }
    rows.push_back(std::move(fields));
  }
  if (!have_header) throw SchemaError(header.front(), "missing header line");
  return rows;
}

template <typename T>
T parse_number(const std::string& text, const std::string& column) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw SchemaError(column, fmt::format("column '{}': cannot parse '{}'", column, text));
  }
  return value;
}

}  // namespace

std::string format_float(double v) { return fmt::format("{:.12g}", v); }

void write_records(std::ostream& out, const std::vector<mc::PulseRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{}\n", r.setting_id, r.counts[0], r.counts[1], r.counts[2], r.counts[3]);
  }
}

std::vector<mc::PulseRecord> read_records(std::istream& in) {
  const std::vector<std::string> header{"setting_id", "a_t", "a_r", "b_t", "b_r"};
  std::vector<mc::PulseRecord> out;
  for (const auto& f : read_table(in, header)) {
    mc::PulseRecord r;
    if (f[0].empty()) throw SchemaError("setting_id", "column 'setting_id': empty value");
    r.setting_id = f[0];
    for (int k = 0; k < 4; ++k) {
      r.counts[k] = parse_number<std::int64_t>(f[k + 1], header[k + 1]);
      if (r.counts[k] < 0) throw SchemaError(header[k + 1], fmt::format("column '{}': negative count", header[k + 1]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << format_float(r.angle_deg) << ',' << format_float(r.value) << ',' << format_float(r.std_err) << ','
        << r.pulses << '\n';
  }
}

std::vector<SweepRow> read_sweep(std::istream& in) {
  const std::vector<std::string> header{"angle_deg", "value", "std_err", "pulses"};
  std::vector<SweepRow> out;
  for (const auto& f : read_table(in, header)) {
    SweepRow r;
    r.angle_deg = parse_number<double>(f[0], header[0]);
    r.value = parse_number<double>(f[1], header[1]);
    r.std_err = parse_number<double>(f[2], header[2]);
    r.pulses = parse_number<long long>(f[3], header[3]);
    out.push_back(r);
  }
  return out;
}

}  // namespace mbs::io
