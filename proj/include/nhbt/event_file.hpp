#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nhbt/event_synth.hpp"

namespace nhbt {

/// One on-disk event record: channel byte plus a picosecond timestamp.
struct EventRecord {
  std::uint8_t channel = 0;  ///< 0 = transmitted (D1), 1 = reflected (D2)
  std::uint64_t time_ps = 0;
};

inline constexpr std::uint16_t kEventFileVersion = 1;

/// Serializes two detector streams into the binary event format:
/// magic "NEVT", u16 LE version, u16 zero, then 9-byte records
/// (u8 channel, u64 LE picoseconds) merged in (timestamp, channel) order.
/// Timestamps are rounded to the nearest picosecond; negative times are
/// rejected.
void write_event_file(const std::string& path, const EventStream& transmitted,
                      const EventStream& reflected);

/// Record-level variant; records must already be (time, channel)-sorted.
void write_event_records(const std::string& path,
                         const std::vector<EventRecord>& records);

/// Parses an event file back into per-channel streams (seconds). Throws
/// format_error, with the byte offset, on bad magic, unsupported version,
/// nonzero reserved bytes, truncated records, channels other than 0/1, or
/// out-of-order records.
std::pair<EventStream, EventStream> read_event_file(const std::string& path);

std::vector<EventRecord> read_event_records(const std::string& path);

}  // namespace nhbt
