// Copyright 2026 The ldpfed Authors
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

#ifndef LDPFED_ERRORS_HPP
#define LDPFED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ldpfed {

/// Base class for every error raised by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent experiment configuration.
class config_error : public error {
 public:
  using error::error;
};

/// Mismatched tensor/parameter-vector layouts.
class shape_error : public error {
 public:
  using error::error;
};

/// Non-finite value encountered during numeric work.
class numeric_error : public error {
 public:
  using error::error;
};

/// Value outside the mechanism's integer universe.
class domain_error : public error {
 public:
  using error::error;
};

/// Operation would require materializing a universe that is too large.
class capacity_error : public error {
 public:
  using error::error;
};

/// Malformed input file (IDX parsing and friends).
class format_error : public error {
 public:
  using error::error;
};

/// Missing or unreadable data file.
class data_error : public error {
 public:
  using error::error;
};

/// Violation of the federation round protocol (length mismatch etc.).
class protocol_error : public error {
 public:
  using error::error;
};

/// Privacy-accounting misuse, e.g. recording the same round twice.
class accounting_error : public error {
 public:
  using error::error;
};

}  // namespace ldpfed

#endif  // LDPFED_ERRORS_HPP
