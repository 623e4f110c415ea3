// Copyright 2026 The VFedSSD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "vfedssd/common/error.hpp"
#include "vfedssd/transport/channel.hpp"

namespace vfedssd {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override { close(); }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 protected:
  void write_frame(std::span<const std::byte> frame) override {
    if (fd_ < 0) throw TransportError("tcp channel closed");
    const auto* p = reinterpret_cast<const char*>(frame.data());
    std::size_t left = frame.size();
    while (left > 0) {
      const ssize_t n = ::send(fd_, p, left, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("tcp send"));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::vector<std::byte> read_frame(Millis timeout) override {
    if (fd_ < 0) throw TransportError("tcp channel closed");
    std::vector<std::byte> frame(kFrameHeaderSize);
    // A timeout before the first byte leaves the stream intact; once a frame
    // has started, a stall means the session is broken.
    read_exact(frame.data(), kFrameHeaderSize, timeout, true);
    const FrameHeader h = decode_header(frame);
    const std::size_t body = h.payload_bytes() + 4;
    frame.resize(kFrameHeaderSize + body);
    read_exact(frame.data() + kFrameHeaderSize, body, timeout, false);
    std::uint32_t meta_bytes;
    std::memcpy(&meta_bytes, frame.data() + frame.size() - 4, 4);
    if (meta_bytes > kMaxMetaBytes) throw ProtocolError("frame meta too large");
    const std::size_t before = frame.size();
    frame.resize(before + meta_bytes);
    read_exact(frame.data() + before, meta_bytes, timeout, false);
    return frame;
  }

 private:
  void read_exact(std::byte* out, std::size_t n, Millis timeout, bool frame_start) {
    std::size_t got = 0;
    while (got < n) {
      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("tcp poll"));
      }
      if (rc == 0) {
        if (frame_start && got == 0) {
          throw TimeoutError("no message within " + std::to_string(timeout.count()) + " ms");
        }
        throw TransportError("peer stalled mid-frame");
      }
      const ssize_t k = ::recv(fd_, out + got, n - got, 0);
      if (k == 0) throw TransportError("peer closed the connection");
      if (k < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("tcp recv"));
      }
      got += static_cast<std::size_t>(k);
    }
  }

  int fd_ = -1;
};

}  // namespace

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const std::string msg = errno_text("bind");
    ::close(fd_);
    throw TransportError(msg + " (" + host + ":" + std::to_string(port) + ")");
  }
  if (::listen(fd_, 1) < 0) {
    const std::string msg = errno_text("listen");
    ::close(fd_);
    throw TransportError(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept(Millis timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  int rc;
  do {
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  } while (rc < 0 && errno == EINTR);
  if (rc < 0) throw TransportError(errno_text("poll"));
  if (rc == 0) throw TimeoutError("no connection within " + std::to_string(timeout.count()) + " ms");
  const int cfd = ::accept(fd_, nullptr, nullptr);
  if (cfd < 0) throw TransportError(errno_text("accept"));
  return std::make_unique<TcpChannel>(cfd);
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, Millis timeout) {
  const sockaddr_in addr = resolve(host, port);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      return std::make_unique<TcpChannel>(fd);
    }
    const int err = errno;
    ::close(fd);
    if ((err != ECONNREFUSED && err != ENOENT && err != ETIMEDOUT) ||
        std::chrono::steady_clock::now() >= deadline) {
      errno = err;
      throw TransportError(errno_text(("connect " + host + ":" + std::to_string(port)).c_str()));
    }
    std::this_thread::sleep_for(Millis(50));
  }
}

}  // namespace vfedssd
