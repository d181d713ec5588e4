#include "teleop/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace teleop::protocol {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Session& session)
      : ws_(std::move(socket)), session_(session) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void pump() {
    if (writing_ || closed_) return;
    if (replies_.empty() && active_) {
      if (auto frame = session_.next_frame()) replies_.push_back(std::move(*frame));
    }
    if (replies_.empty()) {
      if (closing_) {
        closed_ = true;
        ws_.async_close(websocket::close_code::try_again_later,
                        [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    current_ = std::move(replies_.front());
    replies_.pop_front();
    ws_.text(true);
    ws_.async_write(net::buffer(current_),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  bool active() const { return active_; }

  void shutdown() {
    beast::get_lowest_layer(ws_).close();
    release();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    if (!session_.connect()) {
      replies_.push_back(Session::busy_message());
      closing_ = true;
      pump();
      return;
    }
    active_ = true;
    read();
    pump();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      release();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (auto& reply : session_.handle(text)) replies_.push_back(std::move(reply));
    pump();
    read();
  }

  void on_write(beast::error_code ec) {
    writing_ = false;
    if (ec) {
      release();
      return;
    }
    pump();
  }

  void release() {
    if (active_) session_.disconnect();
    active_ = false;
    closed_ = true;
  }

  websocket::stream<beast::tcp_stream> ws_;
  Session& session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> replies_;
  std::string current_;
  bool writing_ = false;
  bool active_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(Session& s, ServerOptions o) : session(s), options(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket), session);
      connections.push_back(conn);
      conn->run();
      accept();
    });
  }

  void pump_all() {
    std::erase_if(connections, [](const std::weak_ptr<Connection>& w) { return w.expired(); });
    for (auto& w : connections) {
      if (auto c = w.lock()) c->pump();
    }
  }

  void tick_loop() {
    const auto period = std::chrono::nanoseconds(1'000'000'000LL / session.scenario().tick_hz);
    auto next = std::chrono::steady_clock::now();
    std::unique_lock lock(stop_mutex);
    while (!stopping) {
      next += period;
      lock.unlock();
      if (session.tick()) net::post(ioc, [this] { pump_all(); });
      lock.lock();
      stop_cv.wait_until(lock, next, [this] { return stopping; });
      const auto now = std::chrono::steady_clock::now();
      if (now - next > 10 * period) next = now;
    }
  }

  Session& session;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::weak_ptr<Connection>> connections;
  std::thread io_thread;
  std::thread tick_thread;
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopping = false;
  bool stopped = false;
  std::uint16_t bound_port = 0;
};

Server::Server(Session& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw Error(ErrorCode::Io, "invalid bind address " + impl_->options.address);
  const tcp::endpoint endpoint(address, impl_->options.port);
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot bind " + impl_->options.address + ":" +
                                   std::to_string(impl_->options.port) + ": " + ec.message());
  }
  impl_->bound_port = acceptor.local_endpoint().port();
  impl_->accept();
  impl_->io_thread = std::thread([this] {
    auto guard = net::make_work_guard(impl_->ioc);
    impl_->ioc.run();
  });
  if (impl_->options.tick_loop) impl_->tick_thread = std::thread([this] { impl_->tick_loop(); });
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->stop_mutex);
    if (impl_->stopped) return;
    impl_->stopping = true;
    impl_->stopped = true;
  }
  impl_->stop_cv.notify_all();
  if (impl_->tick_thread.joinable()) impl_->tick_thread.join();
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    for (auto& w : impl_->connections) {
      if (auto c = w.lock()) c->shutdown();
    }
    impl_->ioc.stop();
  });
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

void Server::wait() {
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code ec, int) {
    if (ec) return;
    {
      std::lock_guard lock(impl_->stop_mutex);
      impl_->stopping = true;
    }
    impl_->stop_cv.notify_all();
  });
  std::thread waiter([&] { signals_ctx.run(); });
  {
    std::unique_lock lock(impl_->stop_mutex);
    impl_->stop_cv.wait(lock, [&] { return impl_->stopping; });
  }
  signals_ctx.stop();
  waiter.join();
  stop();
}

std::uint16_t Server::port() const { return impl_->bound_port; }

void Server::flush() {
  net::post(impl_->ioc, [this] { impl_->pump_all(); });
}

}  // namespace teleop::protocol
