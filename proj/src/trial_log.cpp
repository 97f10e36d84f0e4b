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

#include "reachmpc/trial_log.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace reachmpc {

namespace {

void append_number(std::string& buf, double v) {
  char tmp[32];
  std::snprintf(tmp, sizeof(tmp), "%.12g", v);
  buf += tmp;
}

void append_vector(std::string& buf, const Eigen::VectorXd& v) {
  buf += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) buf += ',';
    append_number(buf, v[i]);
  }
  buf += ']';
}

}  // namespace

TrialLogWriter::TrialLogWriter(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open trial log for writing: " + path);
  buffer_.reserve(1 << 16);
}

TrialLogWriter::~TrialLogWriter() { flush(); }

void TrialLogWriter::flush() {
  if (!buffer_.empty()) {
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
  }
  out_.flush();
}

void TrialLogWriter::write(const LogRecord& r) {
  std::string& b = buffer_;
  b += "{\"t\":";
  append_number(b, r.t);
  b += ",\"reach\":";
  b += std::to_string(r.reach);
  b += ",\"phase\":\"";
  b += r.phase;
  b += "\",\"theta\":";
  append_vector(b, r.theta);
  b += ",\"phi\":";
  append_vector(b, r.phi);
  b += ",\"dphi\":";
  append_vector(b, r.dphi);
  b += ",\"ee\":[";
  append_number(b, r.ee.x());
  b += ',';
  append_number(b, r.ee.y());
  b += "],\"forces\":[";
  for (size_t i = 0; i < r.forces.size(); ++i) {
    if (i > 0) b += ',';
    const auto& [id, force] = r.forces[i];
    b += '[';
    b += std::to_string(id.link);
    b += ',';
    b += std::to_string(id.edge);
    b += ',';
    b += std::to_string(id.slot);
    b += ',';
    append_number(b, force);
    b += ']';
  }
  b += "],\"qp\":\"";
  b += r.qp_status;
  b += "\",\"active\":";
  b += std::to_string(r.active_constraints);
  if (!r.event.empty()) {
    b += ",\"event\":\"";
    b += r.event;
    b += '"';
  }
  b += "}\n";
  if (b.size() > (1 << 15)) flush();
}

std::vector<LogRecord> read_trial_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trial log: " + path);
  std::vector<LogRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    LogRecord r;
    r.t = j.at("t").get<double>();
    r.reach = j.at("reach").get<int>();
    r.phase = j.at("phase").get<std::string>();
    auto vec = [](const nlohmann::json& arr) {
      Eigen::VectorXd v(arr.size());
      for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
      return v;
    };
    r.theta = vec(j.at("theta"));
    r.phi = vec(j.at("phi"));
    r.dphi = vec(j.at("dphi"));
    r.ee = {j.at("ee")[0].get<double>(), j.at("ee")[1].get<double>()};
    for (const auto& f : j.at("forces")) {
      r.forces.push_back({TaxelId{f[0].get<int>(), f[1].get<int>(), f[2].get<int>()},
                          f[3].get<double>()});
    }
    r.qp_status = j.at("qp").get<std::string>();
    r.active_constraints = j.at("active").get<int>();
    if (j.contains("event")) r.event = j.at("event").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace reachmpc
