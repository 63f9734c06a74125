#ifndef NCC_INTERVAL_HPP
#define NCC_INTERVAL_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ncc
{

// Raised when an operation would produce an empty or unbounded interval
// (division by an interval containing zero, sqrt of negative values, NaN).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// A squared distance enclosure reaches zero: the box may contain a collision.
class CollisionPossible : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Caller-supplied data violates a documented precondition.
class PreconditionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail
{

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Below this magnitude the error terms of the error-free transformations may
// underflow, so results are simply pushed one ulp outward.
inline constexpr double eft_floor = 0x1p-960;

// One ulp toward +inf / -inf for finite x; infinities and NaN pass through.
inline double next_up(double x)
{
    if (x == 0) {
        return std::numeric_limits<double>::denorm_min();
    }
    if (!(std::abs(x) <= std::numeric_limits<double>::max())) {
        return x == -inf ? -std::numeric_limits<double>::max() : x;
    }
    auto u = std::bit_cast<std::uint64_t>(x);
    u = x > 0 ? u + 1 : u - 1;
    return std::bit_cast<double>(u);
}

inline double next_down(double x) { return -next_up(-x); }

// Directed rounding through error-free transformations: the rounding error of
// +, *, / and sqrt is computed exactly (TwoSum / FMA residuals) and the
// nearest-rounded result is moved one ulp only when it lies on the wrong side.
inline double add_down(double a, double b)
{
    const double s = a + b;
    const double bb = s - a;
    const double e = (a - (s - bb)) + (b - bb);
    return e < 0 ? next_down(s) : s;
}

inline double add_up(double a, double b)
{
    const double s = a + b;
    const double bb = s - a;
    const double e = (a - (s - bb)) + (b - bb);
    return e > 0 ? next_up(s) : s;
}

inline double mul_down(double a, double b)
{
    const double p = a * b;
    if (a == 0 || b == 0) {
        return 0.0;
    }
    if (std::abs(p) < eft_floor) {
        return next_down(p);
    }
    return std::fma(a, b, -p) < 0 ? next_down(p) : p;
}

inline double mul_up(double a, double b)
{
    const double p = a * b;
    if (a == 0 || b == 0) {
        return 0.0;
    }
    if (std::abs(p) < eft_floor) {
        return next_up(p);
    }
    return std::fma(a, b, -p) > 0 ? next_up(p) : p;
}

// sign of (a/b - q) for q = fl(a/b)
inline int div_residual_sign(double a, double b, double q)
{
    const double r = std::fma(-q, b, a);
    if (r == 0) {
        return 0;
    }
    return ((r > 0) == (b > 0)) ? 1 : -1;
}

inline double div_down(double a, double b)
{
    const double q = a / b;
    if (a == 0) {
        return 0.0;
    }
    if (std::abs(q) < eft_floor || std::abs(a) < eft_floor) {
        return next_down(q);
    }
    return div_residual_sign(a, b, q) < 0 ? next_down(q) : q;
}

inline double div_up(double a, double b)
{
    const double q = a / b;
    if (a == 0) {
        return 0.0;
    }
    if (std::abs(q) < eft_floor || std::abs(a) < eft_floor) {
        return next_up(q);
    }
    return div_residual_sign(a, b, q) > 0 ? next_up(q) : q;
}

inline double sqrt_down(double a)
{
    const double s = std::sqrt(a);
    if (a == 0) {
        return 0.0;
    }
    if (a < eft_floor) {
        return next_down(s);
    }
    return std::fma(-s, s, a) < 0 ? next_down(s) : s;
}

inline double sqrt_up(double a)
{
    const double s = std::sqrt(a);
    if (a == 0) {
        return 0.0;
    }
    if (a < eft_floor) {
        return next_up(s);
    }
    return std::fma(-s, s, a) > 0 ? next_up(s) : s;
}

// x^k for x >= 0, k >= 1, rounded toward -inf / +inf.
inline double pow_down_nonneg(double x, int k)
{
    double r = 1.0;
    double b = x;
    bool first = true;
    while (k > 0) {
        if (k & 1) {
            r = first ? b : mul_down(r, b);
            first = false;
        }
        k >>= 1;
        if (k > 0) {
            b = mul_down(b, b);
        }
    }
    return r;
}

inline double pow_up_nonneg(double x, int k)
{
    double r = 1.0;
    double b = x;
    bool first = true;
    while (k > 0) {
        if (k & 1) {
            r = first ? b : mul_up(r, b);
            first = false;
        }
        k >>= 1;
        if (k > 0) {
            b = mul_up(b, b);
        }
    }
    return r;
}

} // namespace detail

// Closed interval [lo, hi] with finite endpoints. Every operation returns an
// enclosure of the exact real result over all point choices in its operands.
class Interval
{
public:
    constexpr Interval() noexcept : lo_(0.0), hi_(0.0) {}
    // NOLINTNEXTLINE(google-explicit-constructor)
    constexpr Interval(double v) : lo_(v), hi_(v)
    {
        if (!(v - v == 0.0)) {
            throw DomainError("interval: non-finite point value");
        }
    }
    Interval(double lo, double hi) : lo_(lo), hi_(hi)
    {
        if (!(lo <= hi && -std::numeric_limits<double>::max() <= lo
              && hi <= std::numeric_limits<double>::max())) [[unlikely]] {
            bad_endpoints(lo, hi);
        }
    }

    [[nodiscard]] constexpr double lo() const noexcept { return lo_; }
    [[nodiscard]] constexpr double hi() const noexcept { return hi_; }

    // Midpoint; always inside the interval.
    [[nodiscard]] double mid() const noexcept
    {
        const double m = 0.5 * lo_ + 0.5 * hi_;
        return std::clamp(m, lo_, hi_);
    }
    // Upper bound of the true width.
    [[nodiscard]] double width() const noexcept { return detail::add_up(hi_, -lo_); }
    // Upper bound of the distance from mid() to either endpoint.
    [[nodiscard]] double rad() const noexcept
    {
        const double m = mid();
        return std::max(detail::add_up(hi_, -m), detail::add_up(m, -lo_));
    }
    // Magnitude max |x| and mignitude min |x|.
    [[nodiscard]] double mag() const noexcept { return std::max(std::abs(lo_), std::abs(hi_)); }
    [[nodiscard]] double mig() const noexcept
    {
        if (lo_ <= 0 && hi_ >= 0) {
            return 0.0;
        }
        return std::min(std::abs(lo_), std::abs(hi_));
    }

    [[nodiscard]] bool is_point() const noexcept { return lo_ == hi_; }
    [[nodiscard]] bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
    [[nodiscard]] bool contains_zero() const noexcept { return lo_ <= 0.0 && 0.0 <= hi_; }
    [[nodiscard]] bool contains(const Interval &o) const noexcept { return lo_ <= o.lo_ && o.hi_ <= hi_; }
    // o lies strictly inside the interior of *this.
    [[nodiscard]] bool contains_interior(const Interval &o) const noexcept
    {
        return lo_ < o.lo_ && o.hi_ < hi_;
    }
    [[nodiscard]] bool intersects(const Interval &o) const noexcept { return lo_ <= o.hi_ && o.lo_ <= hi_; }
    [[nodiscard]] bool certainly_positive() const noexcept { return lo_ > 0.0; }
    [[nodiscard]] bool certainly_negative() const noexcept { return hi_ < 0.0; }

    Interval &operator+=(const Interval &o);
    Interval &operator-=(const Interval &o);
    Interval &operator*=(const Interval &o);
    Interval &operator/=(const Interval &o);

    friend bool operator==(const Interval &a, const Interval &b) noexcept
    {
        return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    [[noreturn, gnu::noinline, gnu::cold]] static void bad_endpoints(double lo, double hi)
    {
        throw DomainError("interval: invalid endpoints [" + std::to_string(lo) + ", " + std::to_string(hi)
                          + "]");
    }

    double lo_;
    double hi_;
};

inline std::ostream &operator<<(std::ostream &os, const Interval &a)
{
    return os << '[' << a.lo() << ", " << a.hi() << ']';
}

inline Interval operator-(const Interval &a) { return Interval(-a.hi(), -a.lo()); }
inline Interval operator+(const Interval &a) { return a; }

inline Interval operator+(const Interval &a, const Interval &b)
{
    return Interval(detail::add_down(a.lo(), b.lo()), detail::add_up(a.hi(), b.hi()));
}

inline Interval operator-(const Interval &a, const Interval &b)
{
    return Interval(detail::add_down(a.lo(), -b.hi()), detail::add_up(a.hi(), -b.lo()));
}

inline Interval operator*(const Interval &a, const Interval &b)
{
    using namespace detail;
    const double al = a.lo(), ah = a.hi(), bl = b.lo(), bh = b.hi();
    if (al >= 0) {
        if (bl >= 0) {
            return Interval(mul_down(al, bl), mul_up(ah, bh));
        }
        if (bh <= 0) {
            return Interval(mul_down(ah, bl), mul_up(al, bh));
        }
        return Interval(mul_down(ah, bl), mul_up(ah, bh));
    }
    if (ah <= 0) {
        if (bl >= 0) {
            return Interval(mul_down(al, bh), mul_up(ah, bl));
        }
        if (bh <= 0) {
            return Interval(mul_down(ah, bh), mul_up(al, bl));
        }
        return Interval(mul_down(al, bh), mul_up(al, bl));
    }
    // a straddles zero
    if (bl >= 0) {
        return Interval(mul_down(al, bh), mul_up(ah, bh));
    }
    if (bh <= 0) {
        return Interval(mul_down(ah, bl), mul_up(al, bl));
    }
    return Interval(std::min(mul_down(al, bh), mul_down(ah, bl)), std::max(mul_up(al, bl), mul_up(ah, bh)));
}

inline Interval operator/(const Interval &a, const Interval &b)
{
    using namespace detail;
    if (b.contains_zero()) {
        throw DomainError("interval: division by an interval containing zero");
    }
    const double al = a.lo(), ah = a.hi(), bl = b.lo(), bh = b.hi();
    if (bl > 0) {
        if (al >= 0) {
            return Interval(div_down(al, bh), div_up(ah, bl));
        }
        if (ah <= 0) {
            return Interval(div_down(al, bl), div_up(ah, bh));
        }
        return Interval(div_down(al, bl), div_up(ah, bl));
    }
    // b < 0
    if (al >= 0) {
        return Interval(div_down(ah, bh), div_up(al, bl));
    }
    if (ah <= 0) {
        return Interval(div_down(ah, bl), div_up(al, bh));
    }
    return Interval(div_down(ah, bh), div_up(al, bh));
}

inline Interval &Interval::operator+=(const Interval &o) { return *this = *this + o; }
inline Interval &Interval::operator-=(const Interval &o) { return *this = *this - o; }
inline Interval &Interval::operator*=(const Interval &o) { return *this = *this * o; }
inline Interval &Interval::operator/=(const Interval &o) { return *this = *this / o; }

inline Interval hull(const Interval &a, const Interval &b)
{
    return Interval(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

// Throws DomainError when the intersection is empty.
inline Interval intersect(const Interval &a, const Interval &b)
{
    const double l = std::max(a.lo(), b.lo());
    const double h = std::min(a.hi(), b.hi());
    if (l > h) {
        throw DomainError("interval: empty intersection");
    }
    return Interval(l, h);
}

inline Interval abs(const Interval &a)
{
    if (a.lo() >= 0) {
        return a;
    }
    if (a.hi() <= 0) {
        return -a;
    }
    return Interval(0.0, a.mag());
}

// x^2, tighter than a * a when a straddles zero.
inline Interval sqr(const Interval &a)
{
    const double m = a.mig();
    const double M = a.mag();
    return Interval(detail::mul_down(m, m), detail::mul_up(M, M));
}

inline Interval sqrt(const Interval &a)
{
    if (a.lo() < 0) {
        throw DomainError("interval: sqrt of an interval with negative lower bound");
    }
    return Interval(detail::sqrt_down(a.lo()), detail::sqrt_up(a.hi()));
}

inline Interval pow_int(const Interval &a, int k)
{
    using namespace detail;
    if (k == 0) {
        return Interval(1.0);
    }
    if (k < 0) {
        return Interval(1.0) / pow_int(a, -k);
    }
    if (k % 2 == 0) {
        return Interval(pow_down_nonneg(a.mig(), k), pow_up_nonneg(a.mag(), k));
    }
    const double l = a.lo() >= 0 ? pow_down_nonneg(a.lo(), k) : -pow_up_nonneg(-a.lo(), k);
    const double h = a.hi() >= 0 ? pow_up_nonneg(a.hi(), k) : -pow_down_nonneg(-a.hi(), k);
    return Interval(l, h);
}

// Enclosure of t^(-3/2) for t in d2, i.e. 1/r^3 from an enclosure of r^2.
inline Interval inv_r_cubed(const Interval &d2)
{
    using namespace detail;
    if (!(d2.lo() > 0)) {
        throw CollisionPossible("inv_r_cubed: squared distance enclosure reaches zero");
    }
    const double big = mul_up(d2.hi(), sqrt_up(d2.hi()));
    const double small = mul_down(d2.lo(), sqrt_down(d2.lo()));
    return Interval(div_down(1.0, big), div_up(1.0, small));
}

// Rigorous enclosures of pi and pi/2.
inline Interval pi_interval() { return Interval(3.141592653589793, detail::next_up(3.141592653589793)); }

namespace detail
{

// glibc's sin/cos are accurate to well under one ulp; widen by a few ulps.
inline Interval trig_point_enclosure(double v)
{
    const double e = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(v) + 0x1p-1060;
    return Interval(std::max(-1.0, v - e), std::min(1.0, v + e));
}

// Enclosure of cos (phase 0) or sin (phase 1) over [a]. Extrema sit at
// x = k*pi + phase*pi/2 with value (-1)^k; an extremum is included whenever
// its location cannot be excluded from [a].
inline Interval trig_impl(const Interval &a, int phase)
{
    if (a.width() >= 7.0) {
        return Interval(-1.0, 1.0);
    }
    const Interval pi = pi_interval();
    const Interval shifted = phase == 0 ? a : a - pi * Interval(0.5);
    const Interval k_range = shifted / pi;
    const double v_lo = phase == 0 ? std::cos(a.lo()) : std::sin(a.lo());
    const double v_hi = phase == 0 ? std::cos(a.hi()) : std::sin(a.hi());
    const Interval r = hull(trig_point_enclosure(v_lo), trig_point_enclosure(v_hi));
    double lo = r.lo();
    double hi = r.hi();
    const auto k_lo = static_cast<long long>(std::ceil(k_range.lo()));
    const auto k_hi = static_cast<long long>(std::floor(k_range.hi()));
    for (long long k = k_lo; k <= k_hi; ++k) {
        if (k % 2 == 0) {
            hi = 1.0;
        } else {
            lo = -1.0;
        }
    }
    return Interval(lo, hi);
}

} // namespace detail

inline Interval cos(const Interval &a) { return detail::trig_impl(a, 0); }
inline Interval sin(const Interval &a) { return detail::trig_impl(a, 1); }

// Enclosure of an exact decimal constant given as text (rounded conversions
// can land on either side of the decimal, so both neighbours are included).
inline Interval from_decimal(const std::string &text)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception &) {
        throw DomainError("interval: cannot parse decimal '" + text + "'");
    }
    if (pos != text.size() || !std::isfinite(v)) {
        throw DomainError("interval: cannot parse decimal '" + text + "'");
    }
    return Interval(detail::next_down(v), detail::next_up(v));
}

} // namespace ncc

#endif
