#include "nhbt/event_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "nhbt/errors.hpp"

namespace nhbt {

namespace {

constexpr unsigned char kMagic[4] = {0x4E, 0x45, 0x56, 0x54};  // "NEVT"
constexpr std::size_t kHeaderSize = 8;
constexpr std::size_t kRecordSize = 9;

void put_u16_le(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64_le(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t to_picoseconds(double t_s) {
  if (!(t_s >= 0.0)) {
    throw std::invalid_argument("event timestamps must be >= 0");
  }
  const double ps = std::round(t_s * 1e12);
  if (ps >= 18446744073709551615.0) {
    throw std::invalid_argument("event timestamp overflows 64-bit picoseconds");
  }
  return static_cast<std::uint64_t>(ps);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t byte_offset,
                          const std::string& what) {
  throw format_error(path + ": " + what + " (byte offset " +
                     std::to_string(byte_offset) + ")");
}

}  // namespace

void write_event_records(const std::string& path,
                         const std::vector<EventRecord>& records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& p = records[i - 1];
    const auto& c = records[i];
    if (c.time_ps < p.time_ps ||
        (c.time_ps == p.time_ps && c.channel < p.channel)) {
      throw std::invalid_argument(
          "event records must be sorted by (timestamp, channel)");
    }
  }
  std::string buf;
  buf.reserve(kHeaderSize + kRecordSize * records.size());
  buf.append(reinterpret_cast<const char*>(kMagic), 4);
  put_u16_le(buf, kEventFileVersion);
  put_u16_le(buf, 0);
  for (const EventRecord& rec : records) {
    if (rec.channel > 1) {
      throw std::invalid_argument("event channel must be 0 or 1");
    }
    buf.push_back(static_cast<char>(rec.channel));
    put_u64_le(buf, rec.time_ps);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_event_file(const std::string& path, const EventStream& transmitted,
                      const EventStream& reflected) {
  std::vector<EventRecord> records;
  records.reserve(transmitted.times_s.size() + reflected.times_s.size());
  for (const double t : transmitted.times_s) {
    records.push_back({0, to_picoseconds(t)});
  }
  for (const double t : reflected.times_s) {
    records.push_back({1, to_picoseconds(t)});
  }
  std::sort(records.begin(), records.end(),
            [](const EventRecord& a, const EventRecord& b) {
              if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
              return a.channel < b.channel;
            });
  write_event_records(path, records);
}

std::vector<EventRecord> read_event_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());

  if (data.size() < kHeaderSize) fail_at(path, data.size(), "truncated header");
  if (!std::equal(kMagic, kMagic + 4, bytes)) {
    fail_at(path, 0, "bad magic, expected 'NEVT'");
  }
  const std::uint16_t version =
      static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kEventFileVersion) {
    fail_at(path, 4, "unsupported format version " + std::to_string(version));
  }
  if (bytes[6] != 0 || bytes[7] != 0) {
    fail_at(path, 6, "reserved bytes must be zero");
  }
  const std::size_t body = data.size() - kHeaderSize;
  if (body % kRecordSize != 0) {
    fail_at(path, data.size(),
            "truncated record: body size " + std::to_string(body) +
                " is not a multiple of " + std::to_string(kRecordSize));
  }

  std::vector<EventRecord> records(body / kRecordSize);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t off = kHeaderSize + i * kRecordSize;
    const std::uint8_t channel = bytes[off];
    if (channel > 1) {
      fail_at(path, off, "invalid channel " + std::to_string(channel));
    }
    records[i] = {channel, get_u64_le(bytes + off + 1)};
    if (i > 0) {
      const auto& p = records[i - 1];
      const auto& c = records[i];
      if (c.time_ps < p.time_ps ||
          (c.time_ps == p.time_ps && c.channel < p.channel)) {
        fail_at(path, off, "records out of (timestamp, channel) order");
      }
    }
  }
  return records;
}

std::pair<EventStream, EventStream> read_event_file(const std::string& path) {
  EventStream t{Channel::transmitted, {}};
  EventStream d{Channel::reflected, {}};
  for (const EventRecord& rec : read_event_records(path)) {
    (rec.channel == 0 ? t : d).times_s.push_back(
        static_cast<double>(rec.time_ps) * 1e-12);
  }
  return {std::move(t), std::move(d)};
}

}  // namespace nhbt
