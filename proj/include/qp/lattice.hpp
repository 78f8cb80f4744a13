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

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qp {

inline constexpr int kMaxDim = 4;

/// Point of Z^d + (1/2)v, v in {0,1}^d, stored as twice its coordinates.
class HalfLatticePoint {
public:
    HalfLatticePoint() = default;
    explicit HalfLatticePoint(int d);

    static HalfLatticePoint integer(std::initializer_list<std::int64_t> coords);
    static HalfLatticePoint integer(const std::vector<std::int64_t>& coords);
    static HalfLatticePoint from_doubled(const std::vector<std::int64_t>& doubled);
    static HalfLatticePoint origin(int d) { return HalfLatticePoint(d); }

    int dim() const { return d_; }
    std::int64_t doubled(int i) const { return x2_[i]; }
    void set_doubled(int i, std::int64_t v) { x2_[i] = v; }
    double coord(int i) const { return 0.5 * static_cast<double>(x2_[i]); }
    std::vector<std::int64_t> doubled_vector() const;

    bool is_integer() const;
    /// Componentwise parity of the doubled coordinates, packed in a bitmask.
    unsigned parity() const;

    HalfLatticePoint operator+(const HalfLatticePoint& o) const;
    HalfLatticePoint operator-(const HalfLatticePoint& o) const;
    HalfLatticePoint operator-() const;
    /// Exact half of an integer point (result may be half-integer).
    HalfLatticePoint half() const;
    /// Twice the point; always integer.
    HalfLatticePoint twice() const;

    /// Midpoint exists iff doubled coordinates share parity componentwise.
    static std::optional<HalfLatticePoint> midpoint(const HalfLatticePoint& a, const HalfLatticePoint& b);

    /// Sup norm.
    double norm() const;
    double norm1() const;
    /// n . omega.
    double dot(const std::vector<double>& omega) const;

    bool operator==(const HalfLatticePoint& o) const;
    bool operator!=(const HalfLatticePoint& o) const { return !(*this == o); }
    /// Lexicographic on doubled coordinates.
    bool operator<(const HalfLatticePoint& o) const;

    std::string to_string() const;

private:
    int d_ = 0;
    std::array<std::int64_t, kMaxDim> x2_{};
};

double sup_distance(const HalfLatticePoint& a, const HalfLatticePoint& b);
double l1_distance(const HalfLatticePoint& a, const HalfLatticePoint& b);

struct HalfLatticePointHash {
    std::size_t operator()(const HalfLatticePoint& p) const;
};

/// Finite subset of a single coset Z^d + parity/2, kept sorted lexicographically.
class Region {
public:
    Region() = default;
    /// parity bitmask of the coset; all points must match it.
    Region(int d, unsigned parity);
    Region(int d, unsigned parity, std::vector<HalfLatticePoint> points);
    /// Parity taken from the first point; empty input gives Z^d.
    static Region from_points(int d, std::vector<HalfLatticePoint> points);

    /// Lambda_L(center) within the coset `parity`.
    static Region cube(int d, double L, const HalfLatticePoint& center, unsigned parity = 0);
    /// Integer box prod [lo_i, hi_i].
    static Region box(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi);

    int dim() const { return d_; }
    unsigned parity() const { return parity_; }
    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    const std::vector<HalfLatticePoint>& points() const { return pts_; }
    const HalfLatticePoint& operator[](std::size_t i) const { return pts_[i]; }
    auto begin() const { return pts_.begin(); }
    auto end() const { return pts_.end(); }

    bool contains(const HalfLatticePoint& p) const;
    /// Position in the sorted point list, or -1.
    std::ptrdiff_t index_of(const HalfLatticePoint& p) const;

    double diam() const;
    /// Componentwise min/max of doubled coordinates.
    std::pair<HalfLatticePoint, HalfLatticePoint> bounding_box() const;
    bool symmetric_about(const HalfLatticePoint& c) const;
    bool subset_of(const Region& o) const;
    bool intersects(const Region& o) const;

    Region translated(const HalfLatticePoint& v) const;
    Region reflected() const;  // n -> -n
    Region united(const Region& o) const;
    Region intersected(const Region& o) const;
    Region minus(const Region& o) const;

    bool operator==(const Region& o) const;

private:
    int d_ = 0;
    unsigned parity_ = 0;
    std::vector<HalfLatticePoint> pts_;
};

/// Sup-norm distance between sets; +inf if either is empty.
double dist(const Region& a, const Region& b);
double dist(const HalfLatticePoint& p, const Region& b);

/// Relative boundary of `inner` inside `outer` (sup-norm adjacency).
struct Boundary {
    std::vector<HalfLatticePoint> inner_side;  // points of inner at distance 1 from outer \ inner
    std::vector<HalfLatticePoint> outer_side;  // points of outer \ inner at distance 1 from inner
    std::vector<std::pair<HalfLatticePoint, HalfLatticePoint>> pairs;
};

Boundary boundary(const Region& inner, const Region& outer);

}  // namespace qp
