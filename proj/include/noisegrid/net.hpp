#pragma once

// Thin RAII wrappers over POSIX TCP sockets with line-oriented reads.
// Just enough for the NDJSON protocol; no TLS, no non-blocking writes.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace noisegrid {

enum class RecvStatus { Ok, Eof, Timeout, Error };

class TcpSocket {
 public:
  TcpSocket() = default;
  explicit TcpSocket(int fd) : fd_(fd) {}
  ~TcpSocket() { close(); }
  TcpSocket(TcpSocket&& other) noexcept;
  TcpSocket& operator=(TcpSocket&& other) noexcept;
  TcpSocket(const TcpSocket&) = delete;
  TcpSocket& operator=(const TcpSocket&) = delete;

  // Throws std::runtime_error when the connection cannot be established.
  static TcpSocket connect_to(const std::string& host, uint16_t port);

  bool valid() const { return fd_ >= 0; }
  bool send_all(std::string_view data);

  // Reads up to the next '\n' (not included in `out`). timeout_ms < 0 blocks
  // indefinitely. Returns Eof only when the peer closed before any byte of
  // the current line arrived.
  RecvStatus recv_line(std::string& out, int timeout_ms = -1);

  void shutdown_both();
  void close();

 private:
  int fd_ = -1;
  std::string buf_;
};

class TcpListener {
 public:
  TcpListener() = default;
  ~TcpListener() { close(); }
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // Binds 0.0.0.0:port (port 0 picks an ephemeral port). Throws
  // std::runtime_error on failure.
  static TcpListener bind_on(uint16_t port);

  uint16_t port() const { return port_; }

  // Blocks until a connection arrives or close() is called from another
  // thread; nullopt means the listener was closed.
  std::optional<TcpSocket> accept();

  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

}  // namespace noisegrid
