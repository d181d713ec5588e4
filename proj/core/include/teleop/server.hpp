#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "teleop/session.hpp"

namespace teleop::protocol {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  /// Runs the tick loop at the scenario rate; tests may disable it and drive
  /// Session::tick themselves.
  bool tick_loop = true;
};

/// WebSocket endpoint for one Session: text frames carry protocol messages,
/// extra clients get an "error: busy" frame and are closed.
class Server {
 public:
  Server(Session& session, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the network and tick threads. Throws Error{Io} when the
  /// address cannot be bound.
  void start();
  void stop();

  /// Blocks until SIGINT/SIGTERM or stop().
  void wait();

  std::uint16_t port() const;

  /// Asks the network thread to flush buffered state frames.
  void flush();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace teleop::protocol
