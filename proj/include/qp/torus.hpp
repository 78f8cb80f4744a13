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

#include <complex>

namespace qp {

/// dist(a, Z).
double torus_norm(double a);
/// sqrt(b^2 + dist(a, Z)^2) for a + ib.
double torus_norm(std::complex<double> z);

/// Representative of x mod 1 in [-1/2, 1/2).
double wrap_centered(double x);
/// Shift the real part of z by an integer so it lies nearest to `center`.
std::complex<double> nearest_representative(std::complex<double> z, double center);

}  // namespace qp
