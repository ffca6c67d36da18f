#include "rvc/telemetry.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace rvc::telemetry {

namespace {

struct Crc32Table {
  std::array<std::uint32_t, 256> t{};
  Crc32Table() {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
  }
};

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v & 0xFF);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

void put_f64(std::uint8_t* p, double v) { put_u64(p, std::bit_cast<std::uint64_t>(v)); }

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data) {
  static const Crc32Table table;
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : data) c = table.t[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::array<std::uint8_t, kDatagramSize> encode(const MeasurementDatagram& d) {
  std::array<std::uint8_t, kDatagramSize> out{};
  out[0] = d.version;
  out[1] = d.sensor_id;
  put_u16(&out[2], d.bus_index);
  put_u64(&out[4], d.timestamp_ms);
  put_f64(&out[12], d.v_mag_pu);
  put_f64(&out[20], d.p_w);
  put_f64(&out[28], d.q_var);
  put_u32(&out[36], crc32_ieee({out.data(), 36}));
  return out;
}

std::optional<MeasurementDatagram> decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kDatagramSize) return std::nullopt;
  if (bytes[0] != kProtocolVersion) return std::nullopt;
  if (get_u32(&bytes[36]) != crc32_ieee(bytes.first(36))) return std::nullopt;
  MeasurementDatagram d;
  d.version = bytes[0];
  d.sensor_id = bytes[1];
  d.bus_index = get_u16(&bytes[2]);
  d.timestamp_ms = get_u64(&bytes[4]);
  d.v_mag_pu = get_f64(&bytes[12]);
  d.p_w = get_f64(&bytes[20]);
  d.q_var = get_f64(&bytes[28]);
  return d;
}

Concentrator::Concentrator(std::vector<std::uint8_t> sensor_ids,
                           std::uint64_t window_ms, std::uint64_t nominal_period_ms)
    : sensors_(std::move(sensor_ids)), window_ms_(window_ms), period_ms_(nominal_period_ms) {}

int Concentrator::sensor_slot(std::uint8_t id) const {
  for (std::size_t i = 0; i < sensors_.size(); ++i)
    if (sensors_[i] == id) return static_cast<int>(i);
  return -1;
}

AlignedFrame Concentrator::seal(Pending& p) {
  p.frame.complete =
      p.frame.bitmap == (sensors_.size() >= 32
                             ? 0xFFFFFFFFu
                             : ((1u << sensors_.size()) - 1u));
  if (p.frame.complete)
    ++stats_.frames_complete;
  else
    ++stats_.frames_partial;
  if (!sealed_any_ || p.anchor_ts > newest_sealed_ts_) newest_sealed_ts_ = p.anchor_ts;
  sealed_any_ = true;
  return std::move(p.frame);
}

std::vector<AlignedFrame> Concentrator::push(const MeasurementDatagram& d,
                                             std::uint64_t now_ms) {
  std::vector<AlignedFrame> out = flush(now_ms);
  ++stats_.datagrams;

  const int slot = sensor_slot(d.sensor_id);
  if (slot < 0) {
    ++stats_.unknown_sensor;
    return out;
  }
  // anything at or before the newest sealed anchor arrived too late
  if (sealed_any_ && d.timestamp_ms <= newest_sealed_ts_ &&
      newest_sealed_ts_ - d.timestamp_ms <= window_ms_ * 10) {
    bool joins_pending = false;
    for (auto& p : pending_)
      if (d.timestamp_ms + window_ms_ >= p.anchor_ts && p.anchor_ts + window_ms_ >= d.timestamp_ms)
        joins_pending = true;
    if (!joins_pending) {
      ++stats_.late_drops;
      return out;
    }
  }

  Pending* target = nullptr;
  for (auto& p : pending_) {
    if (d.timestamp_ms + window_ms_ >= p.anchor_ts &&
        p.anchor_ts + window_ms_ >= d.timestamp_ms) {
      target = &p;
      break;
    }
  }
  if (target == nullptr) {
    Pending p;
    p.anchor_ts = d.timestamp_ms;
    p.first_arrival = now_ms;
    p.frame.timestamp_ms = d.timestamp_ms;
    p.frame.slots.assign(sensors_.size(), std::nullopt);
    pending_.push_back(std::move(p));
    target = &pending_.back();
  }

  auto& sl = target->frame.slots[static_cast<std::size_t>(slot)];
  if (sl.has_value()) {
    ++stats_.duplicates;
    return out;
  }
  sl = d;
  target->frame.bitmap |= 1u << slot;

  const std::uint32_t full =
      sensors_.size() >= 32 ? 0xFFFFFFFFu : ((1u << sensors_.size()) - 1u);
  if (target->frame.bitmap == full) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (&*it == target) {
        out.push_back(seal(*it));
        pending_.erase(it);
        break;
      }
    }
  }

  // bounded pending set: window/period + 1 frames
  const std::size_t cap = static_cast<std::size_t>(window_ms_ / period_ms_ + 1);
  while (pending_.size() > cap) {
    out.push_back(seal(pending_.front()));
    pending_.pop_front();
  }
  return out;
}

std::vector<AlignedFrame> Concentrator::flush(std::uint64_t now_ms) {
  std::vector<AlignedFrame> out;
  while (!pending_.empty() &&
         now_ms >= pending_.front().first_arrival + window_ms_) {
    out.push_back(seal(pending_.front()));
    pending_.pop_front();
  }
  return out;
}

std::vector<AlignedFrame> Concentrator::drain() {
  std::vector<AlignedFrame> out;
  while (!pending_.empty()) {
    out.push_back(seal(pending_.front()));
    pending_.pop_front();
  }
  return out;
}

}  // namespace rvc::telemetry
