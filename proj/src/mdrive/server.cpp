// Copyright 2026 The mdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mdrive/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <functional>
#include <utility>

#include "mdrive/error.hpp"
#include "mdrive/session.hpp"

namespace mdrive {
namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const std::string& record_path, std::function<void()> on_close)
      : ws_(std::move(socket)), session_(record_path), on_close_(std::move(on_close)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return finish();
    read();
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return finish();
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    reply_ = session_.handle(text).dump();
    ws_.text(true);
    ws_.async_write(net::buffer(reply_), beast::bind_front_handler(&Connection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return finish();
    read();
  }

  void finish() {
    session_.close();
    if (on_close_) std::exchange(on_close_, nullptr)();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Session session_;
  std::string reply_;
  std::function<void()> on_close_;
};

}  // namespace

struct WebSocketServer::Impl {
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::string record_path;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (acceptor.is_open()) accept();
        return;
      }
      std::make_shared<Connection>(std::move(socket), record_path, [this] { accept(); })->start();
    });
  }
};

WebSocketServer::WebSocketServer(std::uint16_t port, std::string record_path, const std::string& address)
    : impl_(std::make_unique<Impl>()) {
  impl_->record_path = std::move(record_path);
  { Session probe(impl_->record_path); }  // rejects a malformed record file up front
  beast::error_code ec;
  const tcp::endpoint endpoint(net::ip::make_address(address, ec), port);
  if (ec) throw Error(ErrorCode::kInvalidArgument, "bad address '" + address + "'");
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot listen on port " + std::to_string(port) + ": " + ec.message());
}

WebSocketServer::~WebSocketServer() = default;

std::uint16_t WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WebSocketServer::run() {
  impl_->accept();
  impl_->ioc.run();
}

void WebSocketServer::stop() { impl_->ioc.stop(); }

}  // namespace mdrive
