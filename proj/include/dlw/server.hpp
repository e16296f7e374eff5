// SPDX-License-Identifier: Apache-2.0
//
// Transports for the environment protocol: a TCP server with one Session
// per connection (thread per connection), a stdio loop for subprocess
// embedding, and a minimal blocking line client.
#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <functional>
#include <istream>
#include <list>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>

#include "dlw/protocol.hpp"

namespace dlw {

inline constexpr std::size_t kMaxLineBytes = 1 << 20;

namespace detail {

/// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Buffered newline splitter over a socket.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  /// False on EOF, error, or an over-long line.
  bool next(std::string& line) {
    for (;;) {
      if (auto pos = buf_.find('\n'); pos != std::string::npos) {
        line.assign(buf_, 0, pos);
        buf_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      if (buf_.size() > kMaxLineBytes) return false;
      char chunk[4096];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

}  // namespace detail

using SessionFactory = std::function<Session()>;

/// Runs one session over a connected socket until the peer disconnects or
/// sends "close".
inline void serve_connection(int fd, Session session) {
  detail::LineReader reader(fd);
  std::string line;
  while (!session.closed() && reader.next(line)) {
    if (line.empty()) continue;
    std::string reply = session.handle(line);
    reply.push_back('\n');
    if (!detail::send_all(fd, reply)) break;
  }
}

/// TCP server. bind() then run(); stop() from any thread makes run() return
/// after in-flight connections finish.
class TcpServer {
 public:
  TcpServer(SessionFactory factory, std::string host = "127.0.0.1", std::uint16_t port = kDefaultPort)
      : factory_(std::move(factory)), host_(std::move(host)), port_(port) {}

  ~TcpServer() {
    stop();
    join_workers();
  }

  /// Binds and listens; returns the bound port (useful with port 0).
  std::uint16_t bind() {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const auto port_str = std::to_string(port_);
    if (const int rc = ::getaddrinfo(host_.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
      throw std::runtime_error(std::string("getaddrinfo: ") + ::gai_strerror(rc));
    }
    detail::Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    if (!fd) {
      ::freeaddrinfo(res);
      throw std::system_error(errno, std::generic_category(), "socket");
    }
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(fd.get(), res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0) throw std::system_error(errno, std::generic_category(), "bind");
    if (::listen(fd.get(), 64) != 0) throw std::system_error(errno, std::generic_category(), "listen");
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    listen_ = std::move(fd);
    return port_;
  }

  void run() {
    if (!listen_) bind();
    while (!stop_.load()) {
      pollfd pfd{listen_.get(), POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready <= 0) continue;
      detail::Fd client(::accept(listen_.get(), nullptr, nullptr));
      if (!client) continue;
      const int one = 1;
      ::setsockopt(client.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      workers_.emplace_back([this, c = std::move(client)]() mutable {
        try {
          serve_connection(c.get(), factory_());
        } catch (const std::exception&) {
          // A failing session only drops its own connection.
        }
      });
    }
    join_workers();
  }

  void stop() noexcept { stop_.store(true); }
  std::uint16_t port() const noexcept { return port_; }

 private:
  void join_workers() {
    std::list<std::thread> done;
    {
      std::lock_guard lock(mu_);
      done.swap(workers_);
    }
    for (auto& t : done) {
      if (t.joinable()) t.join();
    }
  }

  SessionFactory factory_;
  std::string host_;
  std::uint16_t port_;
  detail::Fd listen_;
  std::atomic<bool> stop_{false};
  std::mutex mu_;
  std::list<std::thread> workers_;
};

/// Serves a single session over line streams (stdin/stdout mode).
inline void serve_stdio(std::istream& in, std::ostream& out, Session session) {
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n' << std::flush;
  }
}

/// Blocking request/response client, one line each way.
class LineClient {
 public:
  LineClient(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto port_str = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
      throw std::runtime_error(std::string("getaddrinfo: ") + ::gai_strerror(rc));
    }
    fd_ = detail::Fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    const int rc = fd_ ? ::connect(fd_.get(), res->ai_addr, res->ai_addrlen) : -1;
    ::freeaddrinfo(res);
    if (rc != 0) throw std::system_error(errno, std::generic_category(), "connect");
    reader_.emplace(fd_.get());
  }

  std::string request(std::string_view line) {
    std::string msg(line);
    msg.push_back('\n');
    if (!detail::send_all(fd_.get(), msg)) throw std::runtime_error("send failed");
    std::string reply;
    if (!reader_->next(reply)) throw std::runtime_error("connection closed");
    return reply;
  }

  /// Sends raw bytes without waiting for a reply.
  void send_raw(std::string_view bytes) {
    if (!detail::send_all(fd_.get(), bytes)) throw std::runtime_error("send failed");
  }

 private:
  detail::Fd fd_;
  std::optional<detail::LineReader> reader_;
};

}  // namespace dlw
