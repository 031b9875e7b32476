#include "seth/frame_codec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace seth::codec {

// ---------------------------------------------------------------------------
// OokTimeline

void OokTimeline::append(Level level, Nanos duration) {
  if (duration < Nanos{0}) throw std::invalid_argument("OokTimeline: negative duration");
  if (duration == Nanos{0}) return;
  if (!segments_.empty() && segments_.back().level == level) {
    segments_.back().duration += duration;
  } else {
    segments_.push_back({level, duration});
  }
  duration_ += duration;
}

void OokTimeline::append(const OokTimeline& other) {
  for (const auto& s : other.segments_) append(s.level, s.duration);
}

std::size_t OokTimeline::transitions(Level initial) const noexcept {
  if (segments_.empty()) return 0;
  return (segments_.front().level != initial ? 1 : 0) + segments_.size() - 1;
}

OokTimeline OokTimeline::drop_prefix(Nanos offset) const {
  OokTimeline out;
  Nanos t{0};
  for (const auto& s : segments_) {
    const Nanos end = t + s.duration;
    if (end > offset) out.append(s.level, end - std::max(t, offset));
    t = end;
  }
  return out;
}

OokTimeline OokTimeline::scaled(double factor) const {
  OokTimeline out;
  for (const auto& s : segments_) {
    out.append(s.level, Nanos{std::llround(static_cast<double>(s.duration.count()) * factor)});
  }
  return out;
}

std::string OokTimeline::dump() const {
  std::ostringstream os;
  for (const auto& s : segments_) {
    os << (s.level == Level::On ? 1 : 0) << ',' << s.duration.count() << '\n';
  }
  return os.str();
}

OokTimeline superpose(std::span<const PlacedTimeline> parts, Nanos window_start, Nanos window_end) {
  std::vector<std::pair<Nanos, Nanos>> on;
  for (const auto& p : parts) {
    Nanos t = p.start;
    for (const auto& s : p.timeline->segments()) {
      const Nanos a = std::max(t, window_start);
      const Nanos b = std::min(t + s.duration, window_end);
      if (s.level == Level::On && a < b) on.emplace_back(a, b);
      t += s.duration;
    }
  }
  std::sort(on.begin(), on.end());

  OokTimeline out;
  Nanos cursor = window_start;
  for (const auto& [a, b] : on) {
    if (b <= cursor) continue;
    const Nanos from = std::max(a, cursor);
    out.append(Level::Off, from - cursor);
    out.append(Level::On, b - from);
    cursor = b;
  }
  if (cursor < window_end) out.append(Level::Off, window_end - cursor);
  return out;
}

// ---------------------------------------------------------------------------
// Frames and CRC

namespace {

constexpr std::array<std::uint8_t, 256> make_crc_table() {
  std::array<std::uint8_t, 256> table{};
  for (int i = 0; i < 256; ++i) {
    auto c = static_cast<std::uint8_t>(i);
    for (int b = 0; b < 8; ++b) c = static_cast<std::uint8_t>((c & 0x80) ? (c << 1) ^ 0x07 : c << 1);
    table[static_cast<std::size_t>(i)] = c;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

std::array<std::uint8_t, 1 + kPayloadOctets> crc_input(std::uint8_t dest,
                                                       const std::array<std::uint8_t, kPayloadOctets>& payload) {
  std::array<std::uint8_t, 1 + kPayloadOctets> buf{};
  buf[0] = dest;
  std::copy(payload.begin(), payload.end(), buf.begin() + 1);
  return buf;
}

}  // namespace

std::uint8_t crc8(std::span<const std::uint8_t> data) noexcept {
  std::uint8_t crc = 0;
  for (auto byte : data) crc = kCrcTable[crc ^ byte];
  return crc;
}

Frame make_frame(int priority, std::uint8_t dest, const std::array<std::uint8_t, kPayloadOctets>& payload,
                 int priority_levels) {
  if (priority < 1 || priority > priority_levels) {
    throw FrameError("priority " + std::to_string(priority) + " outside [1, " + std::to_string(priority_levels) + "]");
  }
  Frame f;
  f.priority = priority;
  f.dest = dest;
  f.payload = payload;
  f.crc = crc8(crc_input(dest, payload));
  return f;
}

void validate(const Frame& frame, int priority_levels) {
  if (frame.priority < 1 || frame.priority > priority_levels) throw FrameError("priority out of range");
  if (frame.crc != crc8(crc_input(frame.dest, frame.payload))) throw FrameError("crc does not match body");
}

Bitstream bytes_to_bits(std::span<const std::uint8_t> bytes) {
  Bitstream bits;
  bits.reserve(bytes.size() * 8);
  for (auto byte : bytes) {
    for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((byte >> b) & 1));
  }
  return bits;
}

Bitstream serialize_body(const Frame& frame) {
  std::array<std::uint8_t, 2 + kPayloadOctets> buf{};
  buf[0] = frame.dest;
  std::copy(frame.payload.begin(), frame.payload.end(), buf.begin() + 1);
  buf.back() = frame.crc;
  return bytes_to_bits(buf);
}

Frame deserialize_body(const Bitstream& bits, int priority) {
  if (bits.size() != kBodyBits) throw std::invalid_argument("frame body must be 64 bits");
  auto octet = [&](std::size_t i) {
    std::uint8_t v = 0;
    for (std::size_t b = 0; b < 8; ++b) v = static_cast<std::uint8_t>((v << 1) | (bits[8 * i + b] & 1));
    return v;
  };
  Frame f;
  f.priority = priority;
  f.dest = octet(0);
  for (std::size_t i = 0; i < kPayloadOctets; ++i) f.payload[i] = octet(1 + i);
  f.crc = octet(1 + kPayloadOctets);
  return f;
}

// ---------------------------------------------------------------------------
// Line coding

OokTimeline dm_encode(const Bitstream& bits, Level initial) {
  OokTimeline out;
  Level level = initial;
  for (auto bit : bits) {
    if (bit == 0) level = !level;
    out.append(level, kSymbol);
    level = !level;
    out.append(level, kSymbol);
  }
  return out;
}

const char* to_string(CodecErrc errc) noexcept {
  switch (errc) {
    case CodecErrc::NoSfd: return "NoSfd";
    case CodecErrc::CodingViolation: return "CodingViolation";
    case CodecErrc::CrcMismatch: return "CrcMismatch";
  }
  return "?";
}

CodecError::CodecError(CodecErrc code, std::size_t bit_offset, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), bit_offset_(bit_offset) {}

namespace {

// Decodes at most `max_bits` bits (all of them when 0). The last segment is
// allowed to run long when it is only partly needed.
Bitstream decode_dm(std::span<const Segment> segs, Level initial, double tol, std::size_t max_bits) {
  if (tol < 0.0 || tol >= 0.5) throw std::invalid_argument("jitter tolerance must be in [0, 0.5)");
  std::vector<Level> halves;
  double period = static_cast<double>(kSymbol.count());
  double elapsed = 0.0;
  const std::size_t want = max_bits * 2;

  for (const auto& s : segs) {
    const double d = static_cast<double>(s.duration.count());
    const auto n = static_cast<long>(std::lround(d / period));
    const std::size_t bit = halves.size() / 2;
    const bool last_needed = want != 0 && halves.size() + static_cast<std::size_t>(std::max(n, 0L)) >= want;
    if (last_needed) {
      if (d < period * (1.0 - tol)) throw CodecError(CodecErrc::CodingViolation, bit, "short run");
      while (halves.size() < want) halves.push_back(s.level);
      break;
    }
    if (n < 1 || n > 2 || std::abs(d - static_cast<double>(n) * period) > tol * period * static_cast<double>(n)) {
      throw CodecError(CodecErrc::CodingViolation, bit, "run of " + std::to_string(s.duration.count()) + " ns");
    }
    for (long i = 0; i < n; ++i) halves.push_back(s.level);
    elapsed += d;
    period = elapsed / static_cast<double>(halves.size());
  }
  if (want != 0 && halves.size() < want) {
    throw CodecError(CodecErrc::CodingViolation, halves.size() / 2, "timeline ends early");
  }
  if (halves.size() % 2 != 0) throw CodecError(CodecErrc::CodingViolation, halves.size() / 2, "half a bit left over");

  Bitstream bits;
  bits.reserve(halves.size() / 2);
  Level prev = initial;
  for (std::size_t i = 0; i < halves.size(); i += 2) {
    if (halves[i] == halves[i + 1]) throw CodecError(CodecErrc::CodingViolation, i / 2, "missing mid-bit transition");
    bits.push_back(halves[i] == prev ? 1 : 0);
    prev = halves[i + 1];
  }
  return bits;
}

bool near(Nanos d, Nanos nominal, double tol) {
  return std::abs(static_cast<double>((d - nominal).count())) <= tol * static_cast<double>(nominal.count());
}

struct CellScan {
  int cells = 0;
  Nanos body_offset{0};
  bool found = false;
};

// Walks (on, off) cells from segment `first`. Stops where the body begins: an
// off run of 1.5 cells (leading 1 bit) or a half-length on run (leading 0 bit).
CellScan scan_cells(std::span<const Segment> segs, std::size_t first, Nanos t, double tol, int min_cells,
                    bool restart_on_garbage) {
  CellScan scan;
  int run = 0;
  for (std::size_t i = first; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (s.level == Level::On) {
      if (near(s.duration, kCellHalf, tol)) {
        ++run;
      } else if (near(s.duration, kSymbol, tol) && run >= min_cells) {
        scan.cells = run;
        scan.body_offset = t;
        scan.found = true;
        return scan;
      } else if (restart_on_garbage) {
        run = 0;
      } else {
        return scan;
      }
    } else {
      const bool cell_off = near(s.duration, kCellHalf, tol);
      const bool body_off = near(s.duration, kCellHalf + kSymbol, tol);
      if (run > 0 && body_off && run >= min_cells) {
        scan.cells = run;
        scan.body_offset = t + s.duration * 2 / 3;
        scan.found = true;
        return scan;
      }
      if (!cell_off) {
        if (!restart_on_garbage) return scan;
        run = 0;
      }
    }
    t += s.duration;
  }
  return scan;
}

Frame decode_body(const OokTimeline& timeline, Nanos offset, int priority) {
  const OokTimeline body = timeline.drop_prefix(offset);
  const Bitstream bits = decode_dm(body.segments(), Level::Off, kDefaultJitterTolerance, kBodyBits);
  Frame f = deserialize_body(bits, priority);
  if (f.crc != crc8(crc_input(f.dest, f.payload))) throw CodecError(CodecErrc::CrcMismatch, 0, "checksum");
  return f;
}

}  // namespace

Bitstream dm_decode(const OokTimeline& timeline, Level initial, double jitter_tolerance) {
  return decode_dm(timeline.segments(), initial, jitter_tolerance, 0);
}

OokTimeline cell_train(int cells) {
  OokTimeline out;
  for (int i = 0; i < cells; ++i) {
    out.append(Level::On, kCellHalf);
    out.append(Level::Off, kCellHalf);
  }
  return out;
}

OokTimeline frame_section(const Bitstream& body) {
  OokTimeline out = cell_train(kSfdCells);
  out.append(dm_encode(body, Level::Off));
  return out;
}

OokTimeline assemble_transmission(int priority, const Bitstream& body) {
  OokTimeline out = cell_train(priority);
  out.append(frame_section(body));
  return out;
}

OokTimeline build_transmission(const Frame& frame) {
  return assemble_transmission(frame.priority, serialize_body(frame));
}

Reception parse_transmission(const OokTimeline& timeline) {
  const auto segs = timeline.segments();
  std::size_t first = 0;
  Nanos t{0};
  if (!segs.empty() && segs[0].level == Level::Off) {
    t = segs[0].duration;
    first = 1;
  }
  const CellScan scan = scan_cells(segs, first, t, kDefaultJitterTolerance, kSfdCells + 1, false);
  if (!scan.found) throw CodecError(CodecErrc::NoSfd, 0, "no delimiter");
  const int priority = scan.cells - kSfdCells;
  Frame f = decode_body(timeline, scan.body_offset, priority);
  return {priority, f};
}

Frame parse_frame_section(const OokTimeline& timeline, int min_sfd_cells) {
  const CellScan scan = scan_cells(timeline.segments(), 0, Nanos{0}, kDefaultJitterTolerance, min_sfd_cells, true);
  if (!scan.found) throw CodecError(CodecErrc::NoSfd, 0, "no delimiter");
  return decode_body(timeline, scan.body_offset, 1);
}

}  // namespace seth::codec
