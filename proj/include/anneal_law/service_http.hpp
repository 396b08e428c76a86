/*
 * Copyright 2026 The anneal-law Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// HTTP binding of ApiSession (cpp-httplib).

#include <optional>
#include <regex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "anneal_law/service.hpp"

namespace anneal_law {

inline constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>anneal-law</title></head>"
    "<body><h1>anneal-law service</h1><p>No UI assets configured; start the server with "
    "<code>--ui-dir</code> to host them. The JSON API is under <code>/v1/</code>.</p></body></html>";

/// True for http(s)://localhost[:port] and http(s)://127.0.0.1[:port].
inline bool is_local_origin(const std::string& origin) {
  static const std::regex re(R"(^https?://(localhost|127\.0\.0\.1|\[::1\])(:\d+)?$)");
  return std::regex_match(origin, re);
}

/// Registers every endpoint of `session` on `server`. `session` must outlive
/// the server. Static files are served from `ui_dir` at `/`, or a
/// placeholder page when it is empty.
inline void mount(httplib::Server& server, const ApiSession& session, const std::optional<std::string>& ui_dir = {}) {
  auto dispatch = [&session](const httplib::Request& req, httplib::Response& res) {
    const auto r = session.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  for (const char* p : {"/healthz", "/v1/fits"}) server.Get(p, dispatch);
  for (const char* p : {"/v1/predict", "/v1/fit", "/v1/sweep/cosine", "/v1/sweep/wsd", "/v1/sweep/anneal-fn",
                        "/v1/sweep/cpt"})
    server.Post(p, dispatch);

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (!origin.empty() && is_local_origin(origin)) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
  });

  if (ui_dir && !ui_dir->empty()) {
    if (!server.set_mount_point("/", *ui_dir)) throw IoError("UI directory '" + *ui_dir + "' not found");
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }
}

}  // namespace anneal_law
