// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dupo {

// Base of the project exception hierarchy. The three direct children map
// onto CLI exit codes: ConfigError -> 1, DataError -> 2, BackendError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// mathexpr / dualgen
class NotMaskableError : public DataError {
 public:
  using DataError::DataError;
};

class NoMaskableCandidatesError : public DataError {
 public:
  using DataError::DataError;
};

class SolverFailureError : public BackendError {
 public:
  using BackendError::BackendError;
};

// reward
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyReferenceError : public DataError {
 public:
  using DataError::DataError;
};

class NoAttemptsError : public DataError {
 public:
  using DataError::DataError;
};

// grpo
class GroupTooSmallError : public DataError {
 public:
  using DataError::DataError;
};

class NonFiniteGradientError : public Error {
 public:
  using Error::Error;
};

// client
class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class RateLimitedError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ProtocolError : public BackendError {
 public:
  ProtocolError(int status, const std::string& body_snippet)
      : BackendError("protocol error: status " + std::to_string(status) +
                     (body_snippet.empty() ? "" : ", body: " + body_snippet)),
        status_(status) {}

  int status() const { return status_; }

 private:
  int status_;
};

}  // namespace dupo
