#include "rvc/udp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "rvc/errors.hpp"

namespace rvc::telemetry {

UdpPublisher::UdpPublisher(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw SocketError("udp publisher: socket() failed");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    throw SocketError("udp publisher: bad address " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw SocketError("udp publisher: connect() failed");
  }
}

UdpPublisher::~UdpPublisher() {
  if (fd_ >= 0) ::close(fd_);
}

UdpPublisher::UdpPublisher(UdpPublisher&& other) noexcept
    : fd_(other.fd_), errors_(other.errors_) {
  other.fd_ = -1;
}

bool UdpPublisher::send(std::span<const std::uint8_t> payload) {
  if (fd_ < 0) {
    ++errors_;
    return false;
  }
  const ssize_t n = ::send(fd_, payload.data(), payload.size(), 0);
  if (n != static_cast<ssize_t>(payload.size())) {
    ++errors_;
    return false;
  }
  return true;
}

UdpReceiver::UdpReceiver(std::uint16_t port, int rcvbuf_bytes) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw SocketError("udp receiver: socket() failed");
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf_bytes, sizeof(rcvbuf_bytes));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw SocketError("udp receiver: bind() failed: " + std::string(strerror(errno)));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpReceiver::~UdpReceiver() {
  if (fd_ >= 0) ::close(fd_);
}

UdpReceiver::UdpReceiver(UdpReceiver&& other) noexcept
    : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

std::optional<std::vector<std::uint8_t>> UdpReceiver::receive(int timeout_ms) {
  if (fd_ < 0) return std::nullopt;
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc <= 0 || !(pfd.revents & POLLIN)) return std::nullopt;
  std::vector<std::uint8_t> buf(2048);
  const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

}  // namespace rvc::telemetry
