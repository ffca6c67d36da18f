#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rvc::telemetry {

/// Fire-and-forget datagram sender. Send failures never throw after
/// construction; they increment error_count() and the caller moves on.
class UdpPublisher {
 public:
  UdpPublisher(const std::string& host, std::uint16_t port);
  ~UdpPublisher();
  UdpPublisher(UdpPublisher&& other) noexcept;
  UdpPublisher& operator=(UdpPublisher&&) = delete;
  UdpPublisher(const UdpPublisher&) = delete;

  bool send(std::span<const std::uint8_t> payload);
  std::uint64_t error_count() const { return errors_; }

 private:
  int fd_ = -1;
  std::uint64_t errors_ = 0;
};

/// Bound datagram receiver (loopback-oriented). Port 0 picks an ephemeral
/// port, readable via port().
class UdpReceiver {
 public:
  explicit UdpReceiver(std::uint16_t port = 0, int rcvbuf_bytes = 1 << 20);
  ~UdpReceiver();
  UdpReceiver(UdpReceiver&& other) noexcept;
  UdpReceiver& operator=(UdpReceiver&&) = delete;
  UdpReceiver(const UdpReceiver&) = delete;

  std::uint16_t port() const { return port_; }

  /// Blocks up to timeout_ms; nullopt on timeout.
  std::optional<std::vector<std::uint8_t>> receive(int timeout_ms);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace rvc::telemetry
