// rkd/common/error.h
//
// Copyright 2026  The rkd authors
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

#ifndef RKD_COMMON_ERROR_H_
#define RKD_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace rkd {

// Base class for all rkd errors.  `kind()` is a stable machine-readable tag;
// the CLI serializes it into the error JSON emitted on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& msg) : Error("geometry", msg) {}
};

// Training-path access to held-out data, missing labels, etc.
class PolicyError : public Error {
 public:
  explicit PolicyError(const std::string& msg) : Error("policy", msg) {}
};

// NaN losses, diverged optimizers.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

// Missing or stale upstream artifact for a pipeline stage.
class DependencyError : public Error {
 public:
  explicit DependencyError(const std::string& msg) : Error("dependency", msg) {}
};

}  // namespace rkd

#endif  // RKD_COMMON_ERROR_H_
