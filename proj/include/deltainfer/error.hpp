/* Copyright 2026 The DeltaInfer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace deltainfer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or mask dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Layer hyper-parameters are inconsistent (groups, weight lengths, ...).
class ParamError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input data contains NaN or infinity.
class ValueError : public Error {
 public:
  using Error::Error;
};

}  // namespace deltainfer
