#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "rvc/telemetry.hpp"
#include "rvc/udp.hpp"

using namespace rvc::telemetry;

namespace {
bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}
}  // namespace

TEST_CASE("crc32 matches the reference check value") {
  const char* s = "123456789";
  CHECK(crc32_ieee({reinterpret_cast<const std::uint8_t*>(s), 9}) == 0xCBF43926u);
  CHECK(crc32_ieee({reinterpret_cast<const std::uint8_t*>(s), 0}) == 0x00000000u);
}

TEST_CASE("encode is exactly 40 bytes, little-endian") {
  MeasurementDatagram d;
  d.sensor_id = 7;
  d.bus_index = 0x0B01;
  d.timestamp_ms = 0x0102030405060708ull;
  const auto bytes = encode(d);
  CHECK(bytes.size() == 40);
  CHECK(bytes[0] == 1);       // version
  CHECK(bytes[1] == 7);       // sensor
  CHECK(bytes[2] == 0x01);    // bus low byte first
  CHECK(bytes[3] == 0x0B);
  CHECK(bytes[4] == 0x08);    // timestamp LSB first
  CHECK(bytes[11] == 0x01);
}

TEST_CASE("decode(encode(x)) == x on fuzzed datagrams incl. extremes") {
  std::mt19937_64 rng(41);
  const double specials[] = {0.0,
                             -0.0,
                             1.0,
                             -1.0,
                             std::numeric_limits<double>::max(),
                             -std::numeric_limits<double>::max(),
                             std::numeric_limits<double>::min(),
                             std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()};
  for (int trial = 0; trial < 100000; ++trial) {
    MeasurementDatagram d;
    d.sensor_id = static_cast<std::uint8_t>(rng());
    d.bus_index = static_cast<std::uint16_t>(rng());
    d.timestamp_ms = rng();
    auto pick = [&](int sel) {
      if (sel < 10) return specials[sel];
      return std::bit_cast<double>(rng() & 0x7FEFFFFFFFFFFFFFull);  // finite
    };
    d.v_mag_pu = pick(static_cast<int>(rng() % 16));
    d.p_w = pick(static_cast<int>(rng() % 16));
    d.q_var = pick(static_cast<int>(rng() % 16));

    const auto bytes = encode(d);
    const auto back = decode(bytes);
    REQUIRE(back.has_value());
    CHECK(back->sensor_id == d.sensor_id);
    CHECK(back->bus_index == d.bus_index);
    CHECK(back->timestamp_ms == d.timestamp_ms);
    CHECK(same_bits(back->v_mag_pu, d.v_mag_pu));
    CHECK(same_bits(back->p_w, d.p_w));
    CHECK(same_bits(back->q_var, d.q_var));
  }
}

TEST_CASE("decode rejects corruption, truncation and bad version") {
  MeasurementDatagram d;
  d.sensor_id = 3;
  d.v_mag_pu = 1.02;
  auto bytes = encode(d);
  CHECK(decode(bytes).has_value());

  auto corrupted = bytes;
  corrupted[15] ^= 0x40;
  CHECK_FALSE(decode(corrupted).has_value());

  CHECK_FALSE(decode({bytes.data(), 39}).has_value());

  auto badver = bytes;
  badver[0] = 9;
  CHECK_FALSE(decode(badver).has_value());
}

TEST_CASE("concentrator completes a frame when all sensors report") {
  Concentrator c({1, 2, 3, 4, 5, 6, 7}, 100, 1000);
  std::vector<AlignedFrame> got;
  for (std::uint8_t s = 1; s <= 7; ++s) {
    MeasurementDatagram d;
    d.sensor_id = s;
    d.timestamp_ms = 5000;
    auto frames = c.push(d, 5000 + s);
    for (auto& f : frames) got.push_back(f);
  }
  REQUIRE(got.size() == 1);
  CHECK(got[0].complete);
  CHECK(got[0].bitmap == 0x7Fu);
  CHECK(c.stats().frames_complete == 1);
}

TEST_CASE("concentrator emits a partial frame after window expiry") {
  Concentrator c({1, 2, 3}, 100, 1000);
  MeasurementDatagram d;
  d.sensor_id = 1;
  d.timestamp_ms = 1000;
  c.push(d, 1000);
  d.sensor_id = 3;
  c.push(d, 1010);
  auto frames = c.flush(1101);  // window expired, sensor 2 silent
  REQUIRE(frames.size() == 1);
  CHECK_FALSE(frames[0].complete);
  CHECK(frames[0].bitmap == 0b101u);
  CHECK(c.stats().frames_partial == 1);
}

TEST_CASE("duplicates are deduplicated, late datagrams dropped") {
  Concentrator c({1, 2}, 100, 1000);
  MeasurementDatagram d;
  d.sensor_id = 1;
  d.timestamp_ms = 1000;
  c.push(d, 1000);
  c.push(d, 1001);  // duplicate (same sensor, same timestamp)
  CHECK(c.stats().duplicates == 1);

  d.sensor_id = 2;
  auto frames = c.push(d, 1002);  // completes the frame
  REQUIRE(frames.size() == 1);

  d.sensor_id = 1;  // straggler for the already-sealed frame
  c.push(d, 1200);
  CHECK(c.stats().late_drops == 1);
}

TEST_CASE("pending memory is bounded by window/period + 1") {
  Concentrator c({1, 2, 3}, 100, 100);
  MeasurementDatagram d;
  d.sensor_id = 1;
  for (int k = 0; k < 50; ++k) {
    d.timestamp_ms = 1000 + 500ull * static_cast<unsigned>(k);
    c.push(d, d.timestamp_ms);
    CHECK(c.pending() <= 2);  // 100/100 + 1
  }
}

TEST_CASE("udp loopback round trip preserves the datagram") {
  UdpReceiver rx(0);
  UdpPublisher tx("127.0.0.1", rx.port());
  MeasurementDatagram d;
  d.sensor_id = 9;
  d.bus_index = 11;
  d.timestamp_ms = 123456;
  d.v_mag_pu = 1.0375;
  d.p_w = 12800.0;
  d.q_var = -400.0;
  CHECK(tx.send(encode(d)));
  const auto pkt = rx.receive(2000);
  REQUIRE(pkt.has_value());
  const auto back = decode({pkt->data(), pkt->size()});
  REQUIRE(back.has_value());
  CHECK(back->v_mag_pu == d.v_mag_pu);
  CHECK(back->bus_index == 11);
  CHECK(tx.error_count() == 0);
}

TEST_CASE("mini soak: 14 sensors over loopback with zero loss") {
  UdpReceiver rx(0, 1 << 20);
  UdpPublisher tx("127.0.0.1", rx.port());
  Concentrator c({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14}, 100, 1000);

  const int ticks = 30;
  int sent = 0;
  std::vector<AlignedFrame> frames;
  for (int t = 0; t < ticks; ++t) {
    for (std::uint8_t s = 1; s <= 14; ++s) {
      MeasurementDatagram d;
      d.sensor_id = s;
      d.bus_index = s;
      d.timestamp_ms = 1000ull * static_cast<unsigned>(t + 1);
      d.v_mag_pu = 1.0 + 0.001 * s;
      tx.send(encode(d));
      ++sent;
    }
    // drain the socket into the concentrator
    while (true) {
      auto pkt = rx.receive(20);
      if (!pkt.has_value()) break;
      auto d = decode({pkt->data(), pkt->size()});
      REQUIRE(d.has_value());
      auto ready = c.push(*d, d->timestamp_ms);
      for (auto& f : ready) frames.push_back(f);
    }
  }
  for (auto& f : c.drain()) frames.push_back(f);
  CHECK(sent == ticks * 14);
  CHECK(static_cast<int>(frames.size()) == ticks);
  int complete = 0;
  for (const auto& f : frames) complete += f.complete ? 1 : 0;
  CHECK(complete == ticks);
}
