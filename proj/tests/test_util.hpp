// Copyright 2026 The groundrl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GROUNDRL_TESTS_TEST_UTIL_HPP_
#define GROUNDRL_TESTS_TEST_UTIL_HPP_

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "groundrl/geometry.hpp"
#include "groundrl/mask.hpp"

namespace testutil {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(GROUNDRL_TEST_DATA) / name;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("groundrl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline groundrl::BinaryMask mask_from_rows(const std::vector<std::string>& rows) {
  const auto h = static_cast<std::int64_t>(rows.size());
  const auto w = static_cast<std::int64_t>(rows.empty() ? 0 : rows[0].size());
  groundrl::BinaryMask m(w, h);
  for (std::int64_t r = 0; r < h; ++r) {
    for (std::int64_t c = 0; c < w; ++c) m.set(r, c, rows[r][c] == '#');
  }
  return m;
}

inline groundrl::BinaryMask box_mask(std::int64_t w, std::int64_t h, int x1, int y1, int x2,
                                     int y2) {
  groundrl::BinaryMask m(w, h);
  for (int r = y1; r < y2; ++r) {
    for (int c = x1; c < x2; ++c) m.set(r, c);
  }
  return m;
}

// A loopback port with nothing listening on it. Connections are refused.
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace testutil

#endif  // GROUNDRL_TESTS_TEST_UTIL_HPP_
