#pragma once

// Bit-exact SEth framing and line coding.
//
// On-air layout of one transmission (raw OOK, 200 kbaud):
//
//   | priority preamble | start-of-frame delimiter | coded body           |
//   | p x (10us on,     | 10 x (10us on, 10us off) | diff. Manchester,    |
//   |      10us off)    | = 200 us                 | 64 bits x 10 us      |
//
// Body bits, all MSB-first: dest (8) | payload (48) | crc8(dest|payload) (8).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seth/time.hpp"

namespace seth::codec {

inline constexpr int kDefaultPriorityLevels = 9;
inline constexpr std::size_t kPayloadOctets = 6;
inline constexpr std::size_t kBodyBits = 8 + 8 * kPayloadOctets + 8;
inline constexpr std::uint8_t kBroadcast = 0xFF;

inline constexpr Nanos kSymbol = 5us;           // half-bit, 200 kbaud
inline constexpr Nanos kBitPeriod = 2 * kSymbol;
inline constexpr Nanos kCellHalf = 10us;        // preamble/SFD on or off symbol
inline constexpr Nanos kCell = 2 * kCellHalf;
inline constexpr int kSfdCells = 10;
inline constexpr Nanos kSfdDuration = kSfdCells * kCell;
inline constexpr Nanos kBodyDuration = static_cast<std::int64_t>(kBodyBits) * kBitPeriod;
inline constexpr Nanos kFrameAirtime = kSfdDuration + kBodyDuration;  // 840 us

inline constexpr double kDefaultJitterTolerance = 0.1;

enum class Level : std::uint8_t { Off = 0, On = 1 };

constexpr Level operator!(Level l) noexcept { return l == Level::On ? Level::Off : Level::On; }

struct Segment {
  Level level;
  Nanos duration;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Physical-layer waveform: (level, duration) runs. Always coalesced, so
/// adjacent segments alternate in level and every duration is positive.
class OokTimeline {
 public:
  OokTimeline() = default;

  /// Appends a run, merging it into the last segment when the level matches.
  /// Zero durations are ignored; negative durations throw.
  void append(Level level, Nanos duration);
  void append(const OokTimeline& other);

  std::span<const Segment> segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }
  bool empty() const noexcept { return segments_.empty(); }
  Nanos duration() const noexcept { return duration_; }

  /// Number of level changes, counting a change from `initial` into the
  /// first segment.
  std::size_t transitions(Level initial) const noexcept;

  /// Waveform with the first `offset` removed.
  OokTimeline drop_prefix(Nanos offset) const;

  /// Same waveform with every duration multiplied by `factor` (rounded to ns).
  OokTimeline scaled(double factor) const;

  /// Debug dump: one `<level:0|1>,<duration_ns>` line per segment.
  std::string dump() const;

  friend bool operator==(const OokTimeline&, const OokTimeline&) = default;

 private:
  std::vector<Segment> segments_;
  Nanos duration_{0};
};

/// One waveform placed on an absolute time axis.
struct PlacedTimeline {
  Nanos start;
  const OokTimeline* timeline;
};

/// Carrier-OR of several waveforms over [window_start, window_end). Anything
/// outside the window is cut; gaps are Off.
OokTimeline superpose(std::span<const PlacedTimeline> parts, Nanos window_start, Nanos window_end);

/// Ordered binary values, each 0 or 1.
using Bitstream = std::vector<std::uint8_t>;

struct Frame {
  int priority = 1;
  std::uint8_t dest = 0;
  std::array<std::uint8_t, kPayloadOctets> payload{};
  std::uint8_t crc = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Builds a frame with its checksum filled in. Throws FrameError when the
/// priority is outside [1, priority_levels].
Frame make_frame(int priority, std::uint8_t dest, const std::array<std::uint8_t, kPayloadOctets>& payload,
                 int priority_levels = kDefaultPriorityLevels);

/// Checks the frame invariants, including the stored checksum.
void validate(const Frame& frame, int priority_levels = kDefaultPriorityLevels);

/// CRC-8, polynomial 0x07, init 0x00, MSB-first, no reflection, no final XOR.
std::uint8_t crc8(std::span<const std::uint8_t> data) noexcept;

Bitstream serialize_body(const Frame& frame);

/// Inverse of serialize_body. The returned frame carries `priority` and the
/// checksum exactly as received; it is not verified here.
Frame deserialize_body(const Bitstream& bits, int priority = 1);

Bitstream bytes_to_bits(std::span<const std::uint8_t> bytes);

/// Differential Manchester over OOK: a transition at every mid-bit, plus one at
/// the start of each 0 bit. `initial` is the line level before the first bit.
OokTimeline dm_encode(const Bitstream& bits, Level initial);

enum class CodecErrc { NoSfd, CodingViolation, CrcMismatch };

const char* to_string(CodecErrc errc) noexcept;

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrc code, std::size_t bit_offset, const std::string& what);
  CodecErrc code() const noexcept { return code_; }
  /// Bit index at which a coding violation was found; 0 for other errors.
  std::size_t bit_offset() const noexcept { return bit_offset_; }

 private:
  CodecErrc code_;
  std::size_t bit_offset_;
};

/// Recovers bits from a differential Manchester waveform. The half-bit period
/// is re-estimated from the data as it goes, so a uniformly fast or slow clock
/// decodes as long as each run stays within `jitter_tolerance` of the estimate.
Bitstream dm_decode(const OokTimeline& timeline, Level initial, double jitter_tolerance = kDefaultJitterTolerance);

/// `cells` repetitions of (10 us on, 10 us off).
OokTimeline cell_train(int cells);

/// Preamble, SFD and coded body of `frame`, back to back.
OokTimeline build_transmission(const Frame& frame);

/// Same layout as build_transmission for an arbitrary (possibly corrupted) body.
OokTimeline assemble_transmission(int priority, const Bitstream& body);

/// SFD followed by the coded body; the part sent after arbitration succeeds.
OokTimeline frame_section(const Bitstream& body);

struct Reception {
  int priority;
  Frame frame;
};

/// Strict receiver for a complete transmission starting at the preamble.
/// Throws CodecError (NoSfd, CodingViolation or CrcMismatch).
Reception parse_transmission(const OokTimeline& timeline);

/// Receiver for a waveform that starts at (or shortly before) the SFD and may
/// carry garbage ahead of it, e.g. another node's overlapping preamble. Locks
/// onto the last run of at least `min_sfd_cells` clean cells. Returns the body
/// with its checksum verified; the priority is left at 1.
Frame parse_frame_section(const OokTimeline& timeline, int min_sfd_cells = 2);

}  // namespace seth::codec
