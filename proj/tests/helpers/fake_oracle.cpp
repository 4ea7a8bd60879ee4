// SPDX-License-Identifier: Apache-2.0
//
// Stand-in external oracle for tests: c = gain * z[:n_c].
//
//   fake_oracle <d> <n_c> [mode] [gain]
//
// Modes: ok, wrong-nc (advertises n_c + 1), bad-id (echoes id + 1),
// short-row (drops the last coordinate), garbage (answers with non-JSON),
// exit-early (exits after the handshake).
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: fake_oracle <d> <n_c> [mode] [gain]\n";
    return 2;
  }
  const int d = std::atoi(argv[1]);
  const int n_c = std::atoi(argv[2]);
  const std::string mode = argc > 3 ? argv[3] : "ok";
  const double gain = argc > 4 ? std::atof(argv[4]) : 1.0;

  std::cout << nlohmann::json{{"protocol", 1}, {"d", d}, {"n_c", mode == "wrong-nc" ? n_c + 1 : n_c}}.dump()
            << std::endl;
  if (mode == "exit-early") return 0;

  std::string line;
  while (std::getline(std::cin, line)) {
    const auto req = nlohmann::json::parse(line);
    if (mode == "garbage") {
      std::cout << "not json" << std::endl;
      continue;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& z : req.at("z")) {
      std::vector<double> c;
      const int keep = mode == "short-row" ? n_c - 1 : n_c;
      for (int k = 0; k < keep; ++k) c.push_back(gain * z.at(k).get<double>());
      rows.push_back(c);
    }
    const long long id = req.at("id").get<long long>() + (mode == "bad-id" ? 1 : 0);
    std::cout << nlohmann::json{{"id", id}, {"c", rows}}.dump() << std::endl;
  }
  return 0;
}
