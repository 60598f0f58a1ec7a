#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbpa/model.hpp"
#include "pbpa/synthdata.hpp"

namespace pbpa {

// Flat key=value run configuration. Unknown keys are rejected with the line
// number; missing keys take the documented defaults. The effective config is
// echoed to the run log so every run records what it actually used.
struct RunConfig {
  ModelConfig model;
  GenConfig gen;
  int n_train = 2000;
  int n_test = 500;
  std::uint64_t train_seed = 1000;
  std::uint64_t test_seed = 900000;
  int log_every = 50;
  int eval_jobs = 1;
  std::string train_data = "train.pbpd";
  std::string test_data = "test.pbpd";
  std::string checkpoint = "model.pbpa";

  // Parse a file (or in-memory text). Throws ContractError with "line N" on
  // malformed/unknown entries.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  // Canonical key -> value map of the effective configuration.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

}  // namespace pbpa
