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
#include "qp/torus.hpp"

#include <cmath>

namespace qp {

double torus_norm(double a) {
    double f = a - std::floor(a);
    return std::min(f, 1.0 - f);
}

double torus_norm(std::complex<double> z) { return std::hypot(z.imag(), torus_norm(z.real())); }

double wrap_centered(double x) { return x - std::floor(x + 0.5); }

std::complex<double> nearest_representative(std::complex<double> z, double center) {
    double shift = std::round(center - z.real());
    return {z.real() + shift, z.imag()};
}

}  // namespace qp
