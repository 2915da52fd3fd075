// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace mvr {

/// Bad caller input: malformed config, mismatched sizes, degenerate geometry.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A computation produced non-finite values or otherwise failed numerically.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace mvr
