/* Copyright 2026 The qplab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qp {

/// Error with a stable machine-readable code (e.g. "near-singular").
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, double value = 0.0)
        : std::runtime_error(code + ": " + message), code_(std::move(code)), value_(value) {}

    const std::string& code() const { return code_; }
    /// Numeric payload, e.g. the offending singular value.
    double value() const { return value_; }

private:
    std::string code_;
    double value_;
};

}  // namespace qp
