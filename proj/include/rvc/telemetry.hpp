#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace rvc::telemetry {

/// Fixed 40-byte little-endian measurement datagram:
///   [0]   u8  protocol version (1)
///   [1]   u8  sensor id
///   [2]   u16 bus index
///   [4]   u64 timestamp, ms since epoch
///   [12]  f64 |v| in pu
///   [20]  f64 p in W
///   [28]  f64 q in var
///   [36]  u32 CRC-32 (IEEE) over bytes [0, 36)
inline constexpr std::size_t kDatagramSize = 40;
inline constexpr std::uint8_t kProtocolVersion = 1;

struct MeasurementDatagram {
  std::uint8_t version = kProtocolVersion;
  std::uint8_t sensor_id = 0;
  std::uint16_t bus_index = 0;
  std::uint64_t timestamp_ms = 0;
  double v_mag_pu = 0.0;
  double p_w = 0.0;
  double q_var = 0.0;
};

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data);

std::array<std::uint8_t, kDatagramSize> encode(const MeasurementDatagram& d);

/// nullopt on wrong size, wrong version, or CRC mismatch.
std::optional<MeasurementDatagram> decode(std::span<const std::uint8_t> bytes);

/// One aligned snapshot: slots follow the concentrator's sensor order.
struct AlignedFrame {
  std::uint64_t timestamp_ms = 0;
  std::vector<std::optional<MeasurementDatagram>> slots;
  std::uint32_t bitmap = 0;  // bit k set when sensor k present
  bool complete = false;
};

struct ConcentratorStats {
  std::uint64_t datagrams = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t late_drops = 0;
  std::uint64_t unknown_sensor = 0;
  std::uint64_t frames_complete = 0;
  std::uint64_t frames_partial = 0;
};

/// Aligns per-sensor datagrams into timestamped frames. A frame is emitted
/// when every expected sensor reported or when its alignment window expires.
/// Pending memory is bounded: the oldest frame is force-emitted once more
/// than window/period + 1 frames are pending.
class Concentrator {
 public:
  Concentrator(std::vector<std::uint8_t> sensor_ids, std::uint64_t window_ms = 100,
               std::uint64_t nominal_period_ms = 1000);

  /// Feed one datagram with its arrival time; returns any frames that became
  /// ready (completed or evicted).
  std::vector<AlignedFrame> push(const MeasurementDatagram& d, std::uint64_t now_ms);

  /// Expire pending frames older than the window.
  std::vector<AlignedFrame> flush(std::uint64_t now_ms);

  /// Force-emit everything still pending.
  std::vector<AlignedFrame> drain();

  const ConcentratorStats& stats() const { return stats_; }
  std::size_t pending() const { return pending_.size(); }
  int n_sensors() const { return static_cast<int>(sensors_.size()); }

 private:
  struct Pending {
    std::uint64_t anchor_ts = 0;
    std::uint64_t first_arrival = 0;
    AlignedFrame frame;
  };

  AlignedFrame seal(Pending& p);
  int sensor_slot(std::uint8_t id) const;

  std::vector<std::uint8_t> sensors_;
  std::uint64_t window_ms_;
  std::uint64_t period_ms_;
  std::deque<Pending> pending_;
  std::uint64_t newest_sealed_ts_ = 0;
  bool sealed_any_ = false;
  ConcentratorStats stats_;
};

}  // namespace rvc::telemetry
