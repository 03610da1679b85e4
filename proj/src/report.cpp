#include "depthscan/report.hpp"

#include <algorithm>
#include <cstdio>

#include "depthscan/errors.hpp"

namespace ds {

namespace {

std::string format_mm(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

}  // namespace

std::string render_error_table(const std::vector<std::string>& error_columns,
                               const std::vector<ReportRow>& rows, bool csv) {
  for (const auto& row : rows) {
    if (row.errors_mm.size() != error_columns.size()) {
      throw ContractViolation("render_error_table: row width does not match columns");
    }
  }

  if (csv) {
    std::string out = "subject_id";
    for (const auto& col : error_columns) out += "," + col;
    out += "\n";
    for (const auto& row : rows) {
      out += row.subject;
      for (const double e : row.errors_mm) out += "," + format_mm(e);
      out += "\n";
    }
    return out;
  }

  const std::string id_header = "Subject ID";
  std::size_t id_width = id_header.size();
  for (const auto& row : rows) id_width = std::max(id_width, row.subject.size());

  std::vector<std::size_t> widths;
  for (const auto& col : error_columns) widths.push_back(col.size());
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.errors_mm.size(); ++i) {
      widths[i] = std::max(widths[i], format_mm(row.errors_mm[i]).size());
    }
  }

  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };

  std::string out = pad_left(id_header, id_width);
  for (std::size_t i = 0; i < error_columns.size(); ++i) {
    out += "  " + pad_left(error_columns[i], widths[i]);
  }
  out += "\n";
  out += std::string(out.size() - 1, '-');
  out += "\n";
  for (const auto& row : rows) {
    out += pad_left(row.subject, id_width);
    for (std::size_t i = 0; i < row.errors_mm.size(); ++i) {
      out += "  " + pad_left(format_mm(row.errors_mm[i]), widths[i]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace ds
