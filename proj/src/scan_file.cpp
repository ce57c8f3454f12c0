#include "nhbt/scan_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string_view>

#include "nhbt/errors.hpp"

namespace nhbt {

namespace {

void append_real(std::string& out, double v) {
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

[[noreturn]] void fail_at(const std::string& origin, std::size_t line,
                          std::size_t column, const std::string& what) {
  throw format_error(origin + ": " + what + " (line " + std::to_string(line) +
                     ", column " + std::to_string(column) + ")");
}

/// One CSV field; `start` is the 1-based column of its first character.
struct Field {
  std::string_view text;
  std::size_t start;
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    fields.push_back({line.substr(begin, end - begin), begin + 1});
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return fields;
}

double parse_real(const Field& f, const std::string& origin, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (ec != std::errc() || f.text.empty()) {
    fail_at(origin, line, f.start, "expected a real number");
  }
  if (ptr != f.text.data() + f.text.size()) {
    fail_at(origin, line,
            f.start + static_cast<std::size_t>(ptr - f.text.data()),
            "trailing characters after number");
  }
  return v;
}

std::uint64_t parse_count(const Field& f, const std::string& origin,
                          std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (ec != std::errc() || f.text.empty()) {
    fail_at(origin, line, f.start, "expected a non-negative integer");
  }
  if (ptr != f.text.data() + f.text.size()) {
    fail_at(origin, line,
            f.start + static_cast<std::size_t>(ptr - f.text.data()),
            "trailing characters after integer");
  }
  return v;
}

}  // namespace

std::string format_scan_rows(const std::vector<ScanRow>& rows) {
  std::string out(kScanFileHeader);
  out.push_back('\n');
  for (const ScanRow& r : rows) {
    append_real(out, r.x_mm);
    out.push_back(',');
    out += std::to_string(r.n_c);
    out.push_back(',');
    out += std::to_string(r.n_t);
    out.push_back(',');
    out += std::to_string(r.n_d);
    out.push_back(',');
    append_real(out, r.duration_s);
    out.push_back('\n');
  }
  return out;
}

void write_scan_file(const std::string& path, const std::vector<ScanRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::string text = format_scan_rows(rows);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ScanRow> parse_scan_rows(const std::string& text,
                                     const std::string& origin) {
  std::vector<ScanRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const bool terminated = eol != std::string::npos;
    if (!terminated) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;

    if (!saw_header) {
      if (line != kScanFileHeader) {
        std::size_t col = 1;
        const std::string_view want(kScanFileHeader);
        while (col <= line.size() && col <= want.size() &&
               line[col - 1] == want[col - 1]) {
          ++col;
        }
        fail_at(origin, line_no, col,
                "bad header, expected '" + std::string(kScanFileHeader) + "'");
      }
      saw_header = true;
    } else if (!line.empty()) {
      const auto fields = split_fields(line);
      if (fields.size() != 5) {
        fail_at(origin, line_no, fields.back().start,
                "expected 5 comma-separated fields, got " +
                    std::to_string(fields.size()));
      }
      ScanRow row;
      row.x_mm = parse_real(fields[0], origin, line_no);
      row.n_c = parse_count(fields[1], origin, line_no);
      row.n_t = parse_count(fields[2], origin, line_no);
      row.n_d = parse_count(fields[3], origin, line_no);
      row.duration_s = parse_real(fields[4], origin, line_no);
      if (!(row.duration_s > 0.0)) {
        fail_at(origin, line_no, fields[4].start, "duration must be > 0");
      }
      rows.push_back(row);
    }
    if (!terminated) {
      fail_at(origin, line_no, line.size() + 1,
              "missing trailing newline on final row");
    }
    pos = eol + 1;
  }
  if (!saw_header) fail_at(origin, 1, 1, "empty file, header expected");
  return rows;
}

std::vector<ScanRow> read_scan_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_scan_rows(text, path);
}

}  // namespace nhbt
