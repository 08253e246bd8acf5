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

// WebSocket endpoint around Session. Text frames only. One connection is
// served at a time; the next is accepted when it closes.

#ifndef MDRIVE_SERVER_HPP_
#define MDRIVE_SERVER_HPP_

#include <cstdint>
#include <memory>
#include <string>

namespace mdrive {

class WebSocketServer {
 public:
  /// Binds immediately; port 0 picks a free port. Throws kIo when binding
  /// fails and kParse when `record_path` holds a malformed demo file.
  WebSocketServer(std::uint16_t port, std::string record_path, const std::string& address = "127.0.0.1");
  ~WebSocketServer();

  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  std::uint16_t port() const;
  /// Serves until stop() is called.
  void run();
  /// Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mdrive

#endif  // MDRIVE_SERVER_HPP_
