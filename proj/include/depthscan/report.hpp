#pragma once

#include <string>
#include <vector>

namespace ds {

struct ReportRow {
  std::string subject;
  std::vector<double> errors_mm;  // one per column
};

/// Renders a per-subject error table with millimeter values at two decimals:
/// a "Subject ID" column followed by one column per error variant. Plain text
/// aligns columns; CSV emits comma-separated records with a header line.
std::string render_error_table(const std::vector<std::string>& error_columns,
                               const std::vector<ReportRow>& rows, bool csv = false);

}  // namespace ds
