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

// Reproducibility record written next to every CLI output. It holds no
// timestamps, so repeated runs with equal inputs give identical manifests.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anneal_law/error.hpp"

namespace anneal_law {

inline constexpr std::string_view kVersion = "0.1.0";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct InputHash {
  std::string path;
  std::string fnv1a64;
};

struct RunManifest {
  std::string command;
  nlohmann::json config_snapshot = nlohmann::json::object();
  std::vector<InputHash> input_hashes;
  std::vector<std::string> output_paths;
  std::string tool_version{kVersion};

  void add_input(const std::string& path) { input_hashes.push_back({path, hex64(fnv1a64(read_file(path)))}); }
};

inline nlohmann::json to_json(const RunManifest& m) {
  auto inputs = nlohmann::json::array();
  for (const auto& h : m.input_hashes) inputs.push_back({{"path", h.path}, {"fnv1a64", h.fnv1a64}});
  return {{"command", m.command},
          {"config_snapshot", m.config_snapshot},
          {"input_hashes", inputs},
          {"output_paths", m.output_paths},
          {"tool_version", m.tool_version}};
}

/// Manifest location for a primary output file.
inline std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

}  // namespace anneal_law
