/* Copyright 2026 The mdrive Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the mdrive library.
 *
 * Every fallible call returns an mdrive_status. On failure a message is
 * available from mdrive_last_error() on the calling thread until the next
 * call. Strings returned through char** out-parameters are heap allocated
 * and must be released with mdrive_string_free(). Out-parameters are left
 * untouched on failure.
 */

#ifndef MDRIVE_MDRIVE_H_
#define MDRIVE_MDRIVE_H_

#include <stdint.h>

#if defined(_WIN32)
#define MDRIVE_API __declspec(dllexport)
#else
#define MDRIVE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdrive_status {
  MDRIVE_OK = 0,
  MDRIVE_ERR_INVALID_ARGUMENT = 1,
  MDRIVE_ERR_DIMENSION_MISMATCH = 2,
  MDRIVE_ERR_INFEASIBLE = 3,
  MDRIVE_ERR_SINGULAR = 4,
  MDRIVE_ERR_STATE = 5,
  MDRIVE_ERR_IO = 6,
  MDRIVE_ERR_PARSE = 7,
  MDRIVE_ERR_NUMERIC = 8,
  MDRIVE_ERR_INTERNAL = 9
} mdrive_status;

MDRIVE_API const char* mdrive_version(void);
MDRIVE_API const char* mdrive_status_name(mdrive_status status);
/* Empty string when the last call on this thread succeeded. */
MDRIVE_API const char* mdrive_last_error(void);
MDRIVE_API void mdrive_string_free(char* s);

/* ---- Simulator ---------------------------------------------------------- */

typedef struct mdrive_world mdrive_world;

/* `scenario` is a short name such as "single_follow". */
MDRIVE_API mdrive_status mdrive_world_create(const char* scenario, uint64_t seed, mdrive_world** out);
MDRIVE_API void mdrive_world_destroy(mdrive_world* world);
/* Steers in radians (clamped to +-0.5) with lon in [-1, 1]. `done` may be NULL. */
MDRIVE_API mdrive_status mdrive_world_step(mdrive_world* world, double steer, double lon, int* done);
/* Same JSON as a service "state" frame. */
MDRIVE_API mdrive_status mdrive_world_state(const mdrive_world* world, char** json_out);

/* ---- Driving sessions ---------------------------------------------------- */

typedef struct mdrive_session mdrive_session;

/* `record_path` may be NULL to keep recordings in memory only. */
MDRIVE_API mdrive_status mdrive_session_create(const char* record_path, mdrive_session** out);
/* One client frame in, one server frame out. Protocol errors come back as
 * "error" frames with MDRIVE_OK. */
MDRIVE_API mdrive_status mdrive_session_handle(mdrive_session* session, const char* message, char** reply_out);
/* Disconnects; an unfinished recording is discarded. */
MDRIVE_API void mdrive_session_destroy(mdrive_session* session);

typedef struct mdrive_server mdrive_server;

MDRIVE_API mdrive_status mdrive_server_create(uint16_t port, const char* record_path, mdrive_server** out);
MDRIVE_API mdrive_status mdrive_server_port(const mdrive_server* server, uint16_t* port_out);
/* Blocks until mdrive_server_stop() is called from another thread. */
MDRIVE_API mdrive_status mdrive_server_run(mdrive_server* server);
MDRIVE_API mdrive_status mdrive_server_stop(mdrive_server* server);
MDRIVE_API void mdrive_server_destroy(mdrive_server* server);

/* ---- Runs ---------------------------------------------------------------- */

/* Receives one JSON object per training iteration. */
typedef void (*mdrive_progress_fn)(const char* iteration_json, void* user);

/* Collects accepted scripted-expert episodes into a JSON-lines file. */
MDRIVE_API mdrive_status mdrive_collect_expert(const char* scenario, int episodes, uint64_t seed, int max_steps,
                                               const char* out_path, char** summary_out);

/* `learner` is "gail", "e2e" or "bc"; `config_json` is a run config. The
 * checkpoint and report are written to the configured paths when set. */
MDRIVE_API mdrive_status mdrive_train(const char* learner, const char* config_json, mdrive_progress_fn progress,
                                      void* user, char** report_out);

/* Joint GAIL training over the configured scenarios, then per-scenario
 * evaluation including held-out scenarios. */
MDRIVE_API mdrive_status mdrive_distill(const char* config_json, mdrive_progress_fn progress, void* user,
                                        char** report_out);

/* `agent` is "rule", "expert", "gail", "e2e" or "bc"; learned agents need a
 * checkpoint. A nonzero `sample` makes learned policies draw actions. */
MDRIVE_API mdrive_status mdrive_evaluate(const char* agent, const char* scenario, const char* checkpoint_path,
                                         int episodes, uint64_t seed, double perturbation, int sample,
                                         char** metrics_out);

/* Replays episode `ep` of a demo file, or every episode when ep < 0. */
MDRIVE_API mdrive_status mdrive_replay(const char* demo_path, int ep, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* MDRIVE_MDRIVE_H_ */
