#include <doctest.h>

#include <string>

#include "seth/frame_codec.hpp"
#include "seth/rng.hpp"

using namespace seth;
using namespace seth::codec;

namespace {

// Bit-at-a-time reference, independent of the table-driven library version.
std::uint8_t crc8_bitwise(const std::vector<std::uint8_t>& data) {
  std::uint8_t crc = 0;
  for (std::uint8_t byte : data) {
    for (int b = 7; b >= 0; --b) {
      const bool in = ((byte >> b) & 1) != 0;
      const bool top = (crc & 0x80) != 0;
      crc = static_cast<std::uint8_t>(crc << 1);
      if (in != top) crc ^= 0x07;
    }
  }
  return crc;
}

std::array<std::uint8_t, kPayloadOctets> random_payload(Rng& rng) {
  std::array<std::uint8_t, kPayloadOctets> p{};
  for (auto& b : p) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return p;
}

Bitstream random_bits(Rng& rng, std::size_t n) {
  Bitstream b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
  return b;
}

bool body_passes_crc(const Bitstream& bits) {
  const Frame f = deserialize_body(bits, 1);
  std::vector<std::uint8_t> data{f.dest};
  data.insert(data.end(), f.payload.begin(), f.payload.end());
  return crc8_bitwise(data) == f.crc;
}

}  // namespace

TEST_CASE("crc8 check value and bitwise reference") {
  const std::string check = "123456789";
  const std::vector<std::uint8_t> bytes(check.begin(), check.end());
  CHECK(crc8(bytes) == 0xF4);
  CHECK(crc8_bitwise(bytes) == 0xF4);
  CHECK(crc8(std::vector<std::uint8_t>{}) == 0x00);

  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(rng.uniform_int(0, 16)));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    REQUIRE(crc8(data) == crc8_bitwise(data));
  }
}

TEST_CASE("crc8 catches every single-bit flip of the checked octets") {
  Rng rng(7);
  const Frame f = make_frame(3, 0x12, random_payload(rng));
  const Bitstream body = serialize_body(f);
  REQUIRE(body_passes_crc(body));
  for (std::size_t i = 0; i < 56; ++i) {
    Bitstream b = body;
    b[i] ^= 1;
    CHECK_FALSE(body_passes_crc(b));
  }
}

TEST_CASE("make_frame rejects priorities outside the domain") {
  CHECK_THROWS_AS(make_frame(0, 1, {}), FrameError);
  CHECK_THROWS_AS(make_frame(10, 1, {}), FrameError);
  CHECK_NOTHROW(make_frame(10, 1, {}, 10));
  Frame f = make_frame(2, 1, {});
  CHECK_NOTHROW(validate(f));
  f.crc ^= 1;
  CHECK_THROWS_AS(validate(f), FrameError);
}

TEST_CASE("body layout is dest, payload, crc, MSB first") {
  const Frame f = make_frame(1, 0x80, {0x01, 0, 0, 0, 0, 0});
  const Bitstream b = serialize_body(f);
  REQUIRE(b.size() == kBodyBits);
  CHECK(b[0] == 1);
  for (int i = 1; i < 8; ++i) CHECK(b[static_cast<std::size_t>(i)] == 0);
  CHECK(b[15] == 1);
  CHECK(deserialize_body(b, 1) == f);
}

TEST_CASE("dm_encode hand trace") {
  const OokTimeline t = dm_encode({1, 1, 1}, Level::Off);
  OokTimeline expect;
  expect.append(Level::Off, 5us);
  expect.append(Level::On, 10us);
  expect.append(Level::Off, 10us);
  expect.append(Level::On, 5us);
  CHECK(t == expect);

  const OokTimeline z = dm_encode({0, 0}, Level::Off);
  OokTimeline ez;
  ez.append(Level::On, 5us);
  ez.append(Level::Off, 5us);
  ez.append(Level::On, 5us);
  ez.append(Level::Off, 5us);
  CHECK(z == ez);
}

TEST_CASE("dm_encode transition count is bits plus zeros") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Bitstream bits = random_bits(rng, static_cast<std::size_t>(rng.uniform_int(1, 80)));
    std::size_t zeros = 0;
    for (auto b : bits) zeros += b == 0;
    for (Level init : {Level::Off, Level::On}) {
      const OokTimeline t = dm_encode(bits, init);
      CHECK(t.transitions(init) == bits.size() + zeros);
      CHECK(t.duration() == static_cast<std::int64_t>(bits.size()) * kBitPeriod);
    }
  }
}

TEST_CASE("dm round trip for both initial levels and under clock drift") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Bitstream bits = random_bits(rng, static_cast<std::size_t>(rng.uniform_int(1, 64)));
    for (Level init : {Level::Off, Level::On}) {
      const OokTimeline t = dm_encode(bits, init);
      REQUIRE(dm_decode(t, init) == bits);
      CHECK(dm_decode(t.scaled(1.04), init) == bits);
      CHECK(dm_decode(t.scaled(0.96), init) == bits);
    }
  }
}

TEST_CASE("dm_decode reports a coding violation") {
  OokTimeline t;
  t.append(Level::On, 15us);
  t.append(Level::Off, 5us);
  try {
    dm_decode(t, Level::Off);
    FAIL("expected CodecError");
  } catch (const CodecError& e) {
    CHECK(e.code() == CodecErrc::CodingViolation);
  }
}

TEST_CASE("transmission timing is exact") {
  CHECK(kSymbol == 5us);
  CHECK(kBitPeriod == 10us);
  CHECK(kSfdDuration + kBodyDuration == 840us);
  Rng rng(5);
  for (int p = 1; p <= kDefaultPriorityLevels; ++p) {
    const Frame f = make_frame(p, 1, random_payload(rng));
    const OokTimeline t = build_transmission(f);
    CHECK(t.duration() == Nanos{20us} * p + 840us);
    CHECK(t.segments().front().level == Level::On);
    CHECK(frame_section(serialize_body(f)).duration() == kFrameAirtime);
  }
}

TEST_CASE("build and parse round trip") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const int p = static_cast<int>(rng.uniform_int(1, kDefaultPriorityLevels));
    const Frame f = make_frame(p, static_cast<std::uint8_t>(rng.uniform_int(0, 255)), random_payload(rng));
    const Reception r = parse_transmission(build_transmission(f));
    REQUIRE(r.priority == p);
    REQUIRE(r.frame == f);
    CHECK(parse_frame_section(frame_section(serialize_body(f))) == deserialize_body(serialize_body(f), 1));
  }
}

TEST_CASE("parse_transmission without a start delimiter") {
  try {
    parse_transmission(cell_train(4));
    FAIL("expected CodecError");
  } catch (const CodecError& e) {
    CHECK(e.code() == CodecErrc::NoSfd);
  }
}

TEST_CASE("30-bit bursts are caught by the checksum") {
  Rng rng(2024);
  int undetected = 0;
  for (int i = 0; i < 10000; ++i) {
    const Frame f = make_frame(static_cast<int>(rng.uniform_int(1, 9)), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                               random_payload(rng));
    Bitstream body = serialize_body(f);
    const auto off = static_cast<std::size_t>(rng.uniform_int(0, kBodyBits - 30));
    for (std::size_t k = off; k < off + 30; ++k) body[k] ^= 1;
    try {
      parse_transmission(assemble_transmission(f.priority, body));
      ++undetected;
    } catch (const CodecError& e) {
      CHECK(e.code() == CodecErrc::CrcMismatch);
    }
  }
  CHECK(undetected <= 1);
}

TEST_CASE("every burst of at most 8 bits is detected") {
  const Bitstream body = serialize_body(make_frame(1, 0x5a, {1, 2, 3, 4, 5, 6}));
  for (std::size_t len = 1; len <= 8; ++len) {
    const unsigned interior = len >= 2 ? 1u << (len - 2) : 1u;
    for (std::size_t start = 0; start + len <= kBodyBits; ++start) {
      for (unsigned m = 0; m < interior; ++m) {
        Bitstream b = body;
        b[start] ^= 1;
        if (len >= 2) {
          b[start + len - 1] ^= 1;
          for (std::size_t k = 0; k + 2 < len; ++k) {
            if ((m >> k) & 1) b[start + 1 + k] ^= 1;
          }
        }
        REQUIRE_FALSE(body_passes_crc(b));
      }
    }
  }
}

TEST_CASE("superpose ORs carriers inside a window") {
  OokTimeline a, b;
  a.append(Level::On, 10us);
  a.append(Level::Off, 10us);
  b.append(Level::Off, 5us);
  b.append(Level::On, 10us);
  const std::vector<PlacedTimeline> parts{{Nanos{0}, &a}, {Nanos{0}, &b}};
  const OokTimeline s = superpose(parts, Nanos{0}, 20us);
  OokTimeline expect;
  expect.append(Level::On, 15us);
  expect.append(Level::Off, 5us);
  CHECK(s == expect);
}

TEST_CASE("timeline append rejects negative durations and coalesces") {
  OokTimeline t;
  t.append(Level::On, 5us);
  t.append(Level::On, 5us);
  t.append(Level::Off, Nanos{0});
  CHECK(t.size() == 1);
  CHECK(t.duration() == 10us);
  CHECK_THROWS(t.append(Level::On, Nanos{-1}));
  CHECK(t.dump() == "1,10000\n");
}
