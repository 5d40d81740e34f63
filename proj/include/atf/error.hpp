// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace atf {

// Root of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Tensor or mask dimensions disagree with an operation's contract.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// A file was read but its contents are malformed or inconsistent.
class FormatError : public Error {
  public:
    using Error::Error;
};

// A required input (file, auxiliary mask, dataset entry) is missing or unusable.
class InputError : public Error {
  public:
    using Error::Error;
};

// Caller violated a documented precondition (empty sample set, K = 0, ...).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

// Token filtering removed every token; the encoder needs at least one.
class EmptyResultError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace atf
