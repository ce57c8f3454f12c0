#include "nhbt/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string_view>

#include "nhbt/errors.hpp"

namespace nhbt {

namespace {

const std::set<std::string> kKnownKeys = {
    "beam.rate_hz",         "beam.speed_m_s",
    "beam.energy_spread_ev", "beam.coherence_time_s",
    "apparatus.transmission", "apparatus.efficiency",
    "apparatus.tau_d_s",    "apparatus.half_window_s",
    "apparatus.dead_time_s", "scan.positions_mm",
    "scan.x0_mm",           "scan.dwell_s",
    "scan.seed",            "scan.mode",
    "drift.kind",           "drift.amplitude",
    "drift.timescale_s",    "fit.form",
};

const std::set<std::string> kKnownSections = {"beam", "apparatus", "scan",
                                              "drift", "fit"};

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& what) {
  throw config_error(origin + ": " + what + " (line " + std::to_string(line) +
                     ")");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_real(std::string_view v, const std::string& origin,
                  std::size_t line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || v.empty() || ptr != v.data() + v.size()) {
    fail(origin, line, "expected a real number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view v, const std::string& origin,
                        std::size_t line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || v.empty() || ptr != v.data() + v.size()) {
    fail(origin, line,
         "expected an unsigned integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<double> parse_real_list(std::string_view v,
                                    const std::string& origin,
                                    std::size_t line) {
  std::vector<double> out;
  std::size_t begin = 0;
  while (begin <= v.size()) {
    std::size_t comma = v.find(',', begin);
    if (comma == std::string_view::npos) comma = v.size();
    const std::string_view item = trim(v.substr(begin, comma - begin));
    out.push_back(parse_real(item, origin, line));
    begin = comma + 1;
  }
  return out;
}

void append_real(std::string& out, double v) {
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

const char* generator_mode_name(GeneratorMode mode) {
  switch (mode) {
    case GeneratorMode::independent: return "independent";
    case GeneratorMode::spin_resolved: return "spin_resolved";
    case GeneratorMode::net_thinning: return "net_thinning";
  }
  return "?";
}

const char* drift_kind_name(DriftKind kind) {
  switch (kind) {
    case DriftKind::none: return "none";
    case DriftKind::sinusoidal: return "sinusoidal";
    case DriftKind::random_walk: return "random_walk";
  }
  return "?";
}

const char* profile_form_name(ProfileForm form) {
  return form == ProfileForm::approx ? "approx" : "exact";
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> warnings;
  for (auto&& w : beam.validate()) warnings.push_back("beam: " + w);
  for (auto&& w : apparatus.validate()) warnings.push_back("apparatus: " + w);
  for (auto&& w : scan.validate()) warnings.push_back("scan: " + w);
  for (auto&& w : drift.validate()) warnings.push_back("drift: " + w);
  return warnings;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::map<std::string, std::size_t> seen;  // full key -> first line
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view raw(text.data() + pos, eol - pos);
    ++line_no;
    pos = eol + 1;

    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!kKnownSections.count(name)) {
        fail(origin, line_no, "unknown section '[" + name + "]'");
      }
      section = name;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(origin, line_no, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) {
      fail(origin, line_no, "key '" + key + "' outside any section");
    }
    const std::string full = section + "." + key;
    if (!kKnownKeys.count(full)) {
      fail(origin, line_no, "unknown key '" + full + "'");
    }
    if (auto [it, inserted] = seen.emplace(full, line_no); !inserted) {
      fail(origin, line_no,
           "duplicate key '" + full + "' (first at line " +
               std::to_string(it->second) + ")");
    }

    if (full == "beam.rate_hz") {
      config.beam.rate_hz = parse_real(value, origin, line_no);
    } else if (full == "beam.speed_m_s") {
      config.beam.speed_m_s = parse_real(value, origin, line_no);
    } else if (full == "beam.energy_spread_ev") {
      config.beam.energy_spread_ev = parse_real(value, origin, line_no);
    } else if (full == "beam.coherence_time_s") {
      config.beam.coherence_time_s = parse_real(value, origin, line_no);
    } else if (full == "apparatus.transmission") {
      config.apparatus.transmission = parse_real(value, origin, line_no);
    } else if (full == "apparatus.efficiency") {
      config.apparatus.efficiency = parse_real(value, origin, line_no);
    } else if (full == "apparatus.tau_d_s") {
      config.apparatus.response_time_s = parse_real(value, origin, line_no);
    } else if (full == "apparatus.half_window_s") {
      config.apparatus.half_window_s = parse_real(value, origin, line_no);
    } else if (full == "apparatus.dead_time_s") {
      config.apparatus.dead_time_s = parse_real(value, origin, line_no);
    } else if (full == "scan.positions_mm") {
      config.scan.positions_mm = parse_real_list(value, origin, line_no);
    } else if (full == "scan.x0_mm") {
      config.scan.x0_true_mm = parse_real(value, origin, line_no);
    } else if (full == "scan.dwell_s") {
      config.scan.dwell_s = parse_real(value, origin, line_no);
    } else if (full == "scan.seed") {
      config.scan.seed = parse_u64(value, origin, line_no);
    } else if (full == "scan.mode") {
      if (value == "independent") {
        config.scan.mode = GeneratorMode::independent;
      } else if (value == "spin_resolved") {
        config.scan.mode = GeneratorMode::spin_resolved;
      } else if (value == "net_thinning") {
        config.scan.mode = GeneratorMode::net_thinning;
      } else {
        fail(origin, line_no,
             "scan.mode must be independent, spin_resolved or net_thinning");
      }
    } else if (full == "drift.kind") {
      if (value == "none") {
        config.drift.kind = DriftKind::none;
      } else if (value == "sinusoidal") {
        config.drift.kind = DriftKind::sinusoidal;
      } else if (value == "random_walk") {
        config.drift.kind = DriftKind::random_walk;
      } else {
        fail(origin, line_no,
             "drift.kind must be none, sinusoidal or random_walk");
      }
    } else if (full == "drift.amplitude") {
      config.drift.relative_amplitude = parse_real(value, origin, line_no);
    } else if (full == "drift.timescale_s") {
      config.drift.timescale_s = parse_real(value, origin, line_no);
    } else if (full == "fit.form") {
      if (value == "approx") {
        config.fit_form = ProfileForm::approx;
      } else if (value == "exact") {
        config.fit_form = ProfileForm::exact;
      } else {
        fail(origin, line_no, "fit.form must be approx or exact");
      }
    }
    if (eol == text.size()) break;
  }

  for (const char* required :
       {"scan.seed", "scan.positions_mm", "scan.dwell_s"}) {
    if (!seen.count(required)) {
      fail(origin, line_no, std::string("missing mandatory key '") + required +
                                "' (runs must be reproducible)");
    }
  }
  return config;
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text, path);
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  auto kv = [&out](const char* key, double v) {
    out += key;
    out += " = ";
    append_real(out, v);
    out.push_back('\n');
  };
  out += "[beam]\n";
  kv("rate_hz", c.beam.rate_hz);
  kv("speed_m_s", c.beam.speed_m_s);
  kv("energy_spread_ev", c.beam.energy_spread_ev);
  kv("coherence_time_s", c.beam.coherence_time_s);
  out += "\n[apparatus]\n";
  kv("transmission", c.apparatus.transmission);
  kv("efficiency", c.apparatus.efficiency);
  kv("tau_d_s", c.apparatus.response_time_s);
  kv("half_window_s", c.apparatus.half_window_s);
  kv("dead_time_s", c.apparatus.dead_time_s);
  out += "\n[scan]\n";
  out += "positions_mm = ";
  for (std::size_t i = 0; i < c.scan.positions_mm.size(); ++i) {
    if (i) out += ", ";
    append_real(out, c.scan.positions_mm[i]);
  }
  out.push_back('\n');
  kv("x0_mm", c.scan.x0_true_mm);
  kv("dwell_s", c.scan.dwell_s);
  out += "seed = " + std::to_string(c.scan.seed) + "\n";
  out += std::string("mode = ") + generator_mode_name(c.scan.mode) + "\n";
  out += "\n[drift]\n";
  out += std::string("kind = ") + drift_kind_name(c.drift.kind) + "\n";
  kv("amplitude", c.drift.relative_amplitude);
  kv("timescale_s", c.drift.timescale_s);
  out += "\n[fit]\n";
  out += std::string("form = ") + profile_form_name(c.fit_form) + "\n";
  return out;
}

}  // namespace nhbt
