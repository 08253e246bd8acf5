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

// Message handling for one driving connection, independent of transport.
//
// Client frames:
//   {"type":"reset","scenario":str,"seed":int}
//   {"type":"control","steer":f,"lon":f}
//   {"type":"record","on":bool}
// Every frame gets exactly one reply: a "state" frame, or an "error" frame
// after which the session carries on unchanged.

#ifndef MDRIVE_SESSION_HPP_
#define MDRIVE_SESSION_HPP_

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mdrive/demo_io.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

/// {"type":"state","tick","ego","zombies","lanes","done","recording"}; done is
/// null while the episode runs.
nlohmann::json state_frame(const World& world, bool recording);
nlohmann::json error_frame(const std::string& msg);

class Session {
 public:
  /// Finished recordings are appended to `record_path`; with an empty path
  /// they are only kept in memory. Episode numbers continue after those
  /// already in the file.
  explicit Session(std::string record_path = "");
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  nlohmann::json handle(std::string_view text);
  /// Disconnect: an open recording is discarded.
  void close();

  const std::optional<World>& world() const { return world_; }
  bool recording() const { return recording_; }
  /// Episodes finalized by this session, in order.
  const Demonstration& recorded() const { return recorded_; }

 private:
  nlohmann::json on_reset(const nlohmann::json& msg);
  nlohmann::json on_control(const nlohmann::json& msg);
  nlohmann::json on_record(const nlohmann::json& msg);
  void start_episode();
  void finish_episode();

  std::string record_path_;
  std::optional<World> world_;
  bool recording_ = false;
  DemoEpisode open_;
  int next_ep_ = 0;
  Demonstration recorded_;
};

}  // namespace mdrive

#endif  // MDRIVE_SESSION_HPP_
