// Copyright 2026 The epstraj Authors
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

#ifndef EPSTRAJ_ERRORS_HPP_
#define EPSTRAJ_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace epstraj {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model was evaluated outside its domain (singular steering, zero hitch...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An integration or simulation step produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The bicycle steering-rate mapping was requested at |v| <= v_min.
class SingularVelocity : public Error {
 public:
  using Error::Error;
};

// Flat states were requested for a trajectory whose speed is below the floor.
class DegenerateVelocity : public Error {
 public:
  using Error::Error;
};

// Invalid parameter passed to a planner primitive or controller.
class ParamError : public Error {
 public:
  using Error::Error;
};

class TurnTooTight : public Error {
 public:
  using Error::Error;
};

// No connection was found between two consecutive waypoints.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::size_t from, std::size_t to, const std::string& what)
      : Error(what), from_index_(from), to_index_(to) {}

  std::size_t from_index() const { return from_index_; }
  std::size_t to_index() const { return to_index_; }

 private:
  std::size_t from_index_;
  std::size_t to_index_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace epstraj

#endif  // EPSTRAJ_ERRORS_HPP_
