#pragma once

#include <string>
#include <vector>

#include "nhbt/coincidence.hpp"

namespace nhbt {

inline constexpr char kScanFileHeader[] = "x_mm,n_c,n_t,n_d,duration_s";

/// Writes scan rows as CSV: fixed header, one line per row, reals at 17
/// significant digits (lossless double round-trip), newline-terminated.
void write_scan_file(const std::string& path, const std::vector<ScanRow>& rows);

std::string format_scan_rows(const std::vector<ScanRow>& rows);

/// Strict CSV reader for the scan format. Throws format_error carrying
/// "line L, column C" on any deviation: wrong header, wrong field count,
/// non-numeric or trailing characters, negative durations.
std::vector<ScanRow> read_scan_file(const std::string& path);

std::vector<ScanRow> parse_scan_rows(const std::string& text,
                                     const std::string& origin = "<string>");

}  // namespace nhbt
