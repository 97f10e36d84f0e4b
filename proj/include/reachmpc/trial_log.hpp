// Copyright 2026 The reachmpc Authors
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

#ifndef REACHMPC_TRIAL_LOG_HPP_
#define REACHMPC_TRIAL_LOG_HPP_

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "reachmpc/world.hpp"

namespace reachmpc {

/// One per-step record of a trial log. Written as a line-delimited JSON
/// object; every field is named, so each line stands alone.
struct LogRecord {
  double t = 0.0;
  int reach = 0;                  // attempt index within the trial
  std::string phase;              // "reach" | "pullout"
  Eigen::VectorXd theta, phi, dphi;
  Eigen::Vector2d ee = Eigen::Vector2d::Zero();
  std::vector<std::pair<TaxelId, double>> forces;  // nonzero taxels only
  std::string qp_status;
  int active_constraints = 0;
  std::string event;              // "", "reached", "halt_safety", ...
};

/// Buffered line-per-step writer; one file per trial.
class TrialLogWriter {
 public:
  explicit TrialLogWriter(const std::string& path);
  ~TrialLogWriter();

  void write(const LogRecord& record);
  void flush();

 private:
  std::ofstream out_;
  std::string buffer_;
};

/// Parse a trial log back into records (reports recompute all metrics from
/// these alone).
std::vector<LogRecord> read_trial_log(const std::string& path);

}  // namespace reachmpc

#endif  // REACHMPC_TRIAL_LOG_HPP_
