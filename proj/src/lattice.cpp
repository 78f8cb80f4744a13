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
#include "qp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "qp/error.hpp"

namespace qp {

namespace {

void check_dim(int d) {
    if (d < 1 || d > kMaxDim) throw Error("bad-dimension", "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
}

}  // namespace

HalfLatticePoint::HalfLatticePoint(int d) : d_(d) { check_dim(d); }

HalfLatticePoint HalfLatticePoint::integer(std::initializer_list<std::int64_t> coords) {
    return integer(std::vector<std::int64_t>(coords));
}

HalfLatticePoint HalfLatticePoint::integer(const std::vector<std::int64_t>& coords) {
    HalfLatticePoint p(static_cast<int>(coords.size()));
    for (int i = 0; i < p.d_; ++i) p.x2_[i] = 2 * coords[i];
    return p;
}

HalfLatticePoint HalfLatticePoint::from_doubled(const std::vector<std::int64_t>& doubled) {
    HalfLatticePoint p(static_cast<int>(doubled.size()));
    for (int i = 0; i < p.d_; ++i) p.x2_[i] = doubled[i];
    return p;
}

std::vector<std::int64_t> HalfLatticePoint::doubled_vector() const {
    return std::vector<std::int64_t>(x2_.begin(), x2_.begin() + d_);
}

bool HalfLatticePoint::is_integer() const { return parity() == 0; }

unsigned HalfLatticePoint::parity() const {
    unsigned m = 0;
    for (int i = 0; i < d_; ++i)
        if (x2_[i] & 1) m |= 1u << i;
    return m;
}

HalfLatticePoint HalfLatticePoint::operator+(const HalfLatticePoint& o) const {
    HalfLatticePoint r(d_);
    for (int i = 0; i < d_; ++i) r.x2_[i] = x2_[i] + o.x2_[i];
    return r;
}

HalfLatticePoint HalfLatticePoint::operator-(const HalfLatticePoint& o) const {
    HalfLatticePoint r(d_);
    for (int i = 0; i < d_; ++i) r.x2_[i] = x2_[i] - o.x2_[i];
    return r;
}

HalfLatticePoint HalfLatticePoint::operator-() const {
    HalfLatticePoint r(d_);
    for (int i = 0; i < d_; ++i) r.x2_[i] = -x2_[i];
    return r;
}

HalfLatticePoint HalfLatticePoint::half() const {
    if (!is_integer()) throw Error("parity", "half() of a non-integer point " + to_string());
    HalfLatticePoint r(d_);
    for (int i = 0; i < d_; ++i) r.x2_[i] = x2_[i] / 2;
    return r;
}

HalfLatticePoint HalfLatticePoint::twice() const {
    HalfLatticePoint r(d_);
    for (int i = 0; i < d_; ++i) r.x2_[i] = 2 * x2_[i];
    return r;
}

std::optional<HalfLatticePoint> HalfLatticePoint::midpoint(const HalfLatticePoint& a, const HalfLatticePoint& b) {
    if (a.d_ != b.d_ || a.parity() != b.parity()) return std::nullopt;
    HalfLatticePoint r(a.d_);
    for (int i = 0; i < a.d_; ++i) r.x2_[i] = (a.x2_[i] + b.x2_[i]) / 2;
    return r;
}

double HalfLatticePoint::norm() const {
    std::int64_t m = 0;
    for (int i = 0; i < d_; ++i) m = std::max<std::int64_t>(m, std::llabs(x2_[i]));
    return 0.5 * static_cast<double>(m);
}

double HalfLatticePoint::norm1() const {
    std::int64_t m = 0;
    for (int i = 0; i < d_; ++i) m += std::llabs(x2_[i]);
    return 0.5 * static_cast<double>(m);
}

double HalfLatticePoint::dot(const std::vector<double>& omega) const {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += coord(i) * omega[i];
    return s;
}

bool HalfLatticePoint::operator==(const HalfLatticePoint& o) const {
    if (d_ != o.d_) return false;
    for (int i = 0; i < d_; ++i)
        if (x2_[i] != o.x2_[i]) return false;
    return true;
}

bool HalfLatticePoint::operator<(const HalfLatticePoint& o) const {
    for (int i = 0; i < std::min(d_, o.d_); ++i)
        if (x2_[i] != o.x2_[i]) return x2_[i] < o.x2_[i];
    return d_ < o.d_;
}

std::string HalfLatticePoint::to_string() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < d_; ++i) {
        if (i) os << ',';
        if (x2_[i] & 1)
            os << x2_[i] << "/2";
        else
            os << x2_[i] / 2;
    }
    os << ')';
    return os.str();
}

double sup_distance(const HalfLatticePoint& a, const HalfLatticePoint& b) { return (a - b).norm(); }
double l1_distance(const HalfLatticePoint& a, const HalfLatticePoint& b) { return (a - b).norm1(); }

std::size_t HalfLatticePointHash::operator()(const HalfLatticePoint& p) const {
    std::size_t h = static_cast<std::size_t>(p.dim());
    for (int i = 0; i < p.dim(); ++i)
        h ^= std::hash<std::int64_t>{}(p.doubled(i)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

// ---------------------------------------------------------------- Region

Region::Region(int d, unsigned parity) : d_(d), parity_(parity) { check_dim(d); }

Region::Region(int d, unsigned parity, std::vector<HalfLatticePoint> points)
    : d_(d), parity_(parity), pts_(std::move(points)) {
    check_dim(d);
    for (const auto& p : pts_) {
        if (p.dim() != d) throw Error("dimension-mismatch", "point " + p.to_string() + " has wrong dimension");
        if (p.parity() != parity)
            throw Error("parity-mismatch", "point " + p.to_string() + " does not lie in the region's coset");
    }
    std::sort(pts_.begin(), pts_.end());
    pts_.erase(std::unique(pts_.begin(), pts_.end()), pts_.end());
}

Region Region::from_points(int d, std::vector<HalfLatticePoint> points) {
    unsigned par = points.empty() ? 0u : points.front().parity();
    return Region(d, par, std::move(points));
}

Region Region::cube(int d, double L, const HalfLatticePoint& center, unsigned parity) {
    check_dim(d);
    Region r(d, parity);
    if (L < 0) return r;
    // Doubled radius; tolerance absorbs rounding of N^c style radii.
    const auto R2 = static_cast<std::int64_t>(std::floor(2.0 * L + 1e-9));
    std::vector<std::int64_t> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        std::int64_t bit = (parity >> i) & 1u;
        std::int64_t a = center.doubled(i) - R2, b = center.doubled(i) + R2;
        if (((a % 2) + 2) % 2 != bit) ++a;
        if (((b % 2) + 2) % 2 != bit) --b;
        lo[i] = a;
        hi[i] = b;
        if (a > b) return r;
    }
    std::vector<HalfLatticePoint> pts;
    HalfLatticePoint p(d);
    for (int i = 0; i < d; ++i) p.set_doubled(i, lo[i]);
    while (true) {
        pts.push_back(p);
        int i = d - 1;
        for (; i >= 0; --i) {
            if (p.doubled(i) + 2 <= hi[i]) {
                p.set_doubled(i, p.doubled(i) + 2);
                break;
            }
            p.set_doubled(i, lo[i]);
        }
        if (i < 0) break;
    }
    r.pts_ = std::move(pts);  // generated in lexicographic order
    return r;
}

Region Region::box(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) {
    const int d = static_cast<int>(lo.size());
    check_dim(d);
    std::vector<HalfLatticePoint> pts;
    std::vector<std::int64_t> x = lo;
    for (int i = 0; i < d; ++i)
        if (lo[i] > hi[i]) return Region(d, 0);
    while (true) {
        pts.push_back(HalfLatticePoint::integer(x));
        int i = d - 1;
        for (; i >= 0; --i) {
            if (x[i] < hi[i]) {
                ++x[i];
                break;
            }
            x[i] = lo[i];
        }
        if (i < 0) break;
    }
    Region r(d, 0);
    r.pts_ = std::move(pts);
    return r;
}

bool Region::contains(const HalfLatticePoint& p) const { return std::binary_search(pts_.begin(), pts_.end(), p); }

std::ptrdiff_t Region::index_of(const HalfLatticePoint& p) const {
    auto it = std::lower_bound(pts_.begin(), pts_.end(), p);
    if (it == pts_.end() || *it != p) return -1;
    return it - pts_.begin();
}

std::pair<HalfLatticePoint, HalfLatticePoint> Region::bounding_box() const {
    HalfLatticePoint lo(d_), hi(d_);
    if (pts_.empty()) return {lo, hi};
    lo = hi = pts_.front();
    for (const auto& p : pts_)
        for (int i = 0; i < d_; ++i) {
            lo.set_doubled(i, std::min(lo.doubled(i), p.doubled(i)));
            hi.set_doubled(i, std::max(hi.doubled(i), p.doubled(i)));
        }
    return {lo, hi};
}

double Region::diam() const {
    if (pts_.empty()) return 0.0;
    // Sup-norm diameter equals the largest side of the bounding box.
    auto [lo, hi] = bounding_box();
    return (hi - lo).norm();
}

bool Region::symmetric_about(const HalfLatticePoint& c) const {
    const HalfLatticePoint c2 = c.twice();
    for (const auto& p : pts_)
        if (!contains(c2 - p)) return false;
    return true;
}

bool Region::subset_of(const Region& o) const {
    if (pts_.empty()) return true;
    if (parity_ != o.parity_) return false;
    return std::includes(o.pts_.begin(), o.pts_.end(), pts_.begin(), pts_.end());
}

bool Region::intersects(const Region& o) const {
    if (parity_ != o.parity_) return false;
    auto a = pts_.begin(), b = o.pts_.begin();
    while (a != pts_.end() && b != o.pts_.end()) {
        if (*a < *b)
            ++a;
        else if (*b < *a)
            ++b;
        else
            return true;
    }
    return false;
}

Region Region::translated(const HalfLatticePoint& v) const {
    Region r(d_, (parity_ ^ v.parity()));
    r.pts_.reserve(pts_.size());
    for (const auto& p : pts_) r.pts_.push_back(p + v);  // order preserved
    return r;
}

Region Region::reflected() const {
    Region r(d_, parity_);
    r.pts_.reserve(pts_.size());
    for (auto it = pts_.rbegin(); it != pts_.rend(); ++it) r.pts_.push_back(-*it);
    return r;
}

Region Region::united(const Region& o) const {
    if (o.empty()) return *this;
    if (empty()) return o;
    if (parity_ != o.parity_) throw Error("parity-mismatch", "union of regions from different cosets");
    Region r(d_, parity_);
    std::set_union(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(r.pts_));
    return r;
}

Region Region::intersected(const Region& o) const {
    Region r(d_, parity_);
    if (parity_ != o.parity_) return r;
    std::set_intersection(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(r.pts_));
    return r;
}

Region Region::minus(const Region& o) const {
    Region r(d_, parity_);
    if (parity_ != o.parity_) return *this;
    std::set_difference(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(r.pts_));
    return r;
}

bool Region::operator==(const Region& o) const {
    if (pts_.empty() && o.pts_.empty()) return true;
    return d_ == o.d_ && parity_ == o.parity_ && pts_ == o.pts_;
}

double dist(const HalfLatticePoint& p, const Region& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) {
        best = std::min(best, sup_distance(p, q));
        if (best == 0.0) break;
    }
    return best;
}

double dist(const Region& a, const Region& b) {
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    // Bounding-box gap is a lower bound; use it to skip far pairs.
    auto [alo, ahi] = a.bounding_box();
    auto [blo, bhi] = b.bounding_box();
    std::int64_t gap = 0;
    for (int i = 0; i < a.dim(); ++i) {
        gap = std::max(gap, blo.doubled(i) - ahi.doubled(i));
        gap = std::max(gap, alo.doubled(i) - bhi.doubled(i));
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a) {
        // point-to-box lower bound for p against b
        std::int64_t g = 0;
        for (int i = 0; i < a.dim(); ++i) {
            g = std::max(g, blo.doubled(i) - p.doubled(i));
            g = std::max(g, p.doubled(i) - bhi.doubled(i));
        }
        if (0.5 * static_cast<double>(g) >= best) continue;
        for (const auto& q : b) {
            best = std::min(best, sup_distance(p, q));
            if (best <= 0.5 * static_cast<double>(gap)) return best;
        }
    }
    return best;
}

Boundary boundary(const Region& inner, const Region& outer) {
    if (!inner.subset_of(outer)) throw Error("not-nested", "boundary(): inner region is not contained in outer");
    Boundary out;
    const int d = inner.dim();
    if (inner.empty()) return out;
    std::vector<HalfLatticePoint> offsets;
    {
        int total = 1;
        for (int i = 0; i < d; ++i) total *= 3;
        for (int code = 0; code < total; ++code) {
            HalfLatticePoint o(d);
            int c = code;
            bool zero = true;
            for (int i = 0; i < d; ++i) {
                int t = c % 3 - 1;
                c /= 3;
                o.set_doubled(i, 2 * t);
                if (t) zero = false;
            }
            if (!zero) offsets.push_back(o);
        }
        std::sort(offsets.begin(), offsets.end());
    }
    std::vector<HalfLatticePoint> in_side, out_side;
    for (const auto& k : inner) {
        bool on_edge = false;
        for (const auto& o : offsets) {
            HalfLatticePoint q = k + o;
            if (outer.contains(q) && !inner.contains(q)) {
                out.pairs.emplace_back(k, q);
                out_side.push_back(q);
                on_edge = true;
            }
        }
        if (on_edge) in_side.push_back(k);
    }
    std::sort(out_side.begin(), out_side.end());
    out_side.erase(std::unique(out_side.begin(), out_side.end()), out_side.end());
    out.inner_side = std::move(in_side);
    out.outer_side = std::move(out_side);
    return out;
}

}  // namespace qp
