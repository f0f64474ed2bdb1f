#pragma once

// Forward-mode automatic differentiation with a fixed number of tangent
// directions per expression.
//
// A Dual<Real> carries a primal value together with up to kMaxDirections
// partial derivatives. Real is either double or another Dual, which gives
// nested (derivative-of-derivative) evaluation where a caller needs it.
// Every branch in generic code is taken on primal values, so min/max and
// case splits propagate the tangent of the branch that was selected.
//
// Operations never propagate NaN or infinity silently: any non-finite value
// or tangent produced by an operation raises DomainError at that operation.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace difftherm::ad {

inline constexpr std::size_t kMaxDirections = 8;

class DomainError : public std::domain_error {
public:
    DomainError(std::string operation, double value)
        : std::domain_error(describe(operation, value)), operation_(std::move(operation)), value_(value)
    {
    }

    const std::string& operation() const noexcept { return operation_; }
    double value() const noexcept { return value_; }

private:
    static std::string describe(const std::string& operation, double value)
    {
        std::ostringstream os;
        os.precision(17);
        os << "ad: domain error in " << operation << " at primal value " << value;
        return os.str();
    }

    std::string operation_;
    double value_;
};

class WidthMismatch : public std::invalid_argument {
public:
    WidthMismatch(std::size_t a, std::size_t b)
        : std::invalid_argument("ad: tangent widths " + std::to_string(a) + " and " + std::to_string(b)
                                + " mixed in one expression")
    {
    }
};

template <class Real = double>
class Dual;

template <class T>
struct is_dual : std::false_type {};
template <class Real>
struct is_dual<Dual<Real>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

inline double primal(double x) noexcept { return x; }
template <class Real>
double primal(const Dual<Real>& x) noexcept
{
    return primal(x.value());
}

inline bool all_finite(double x) noexcept { return std::isfinite(x); }
template <class Real>
bool all_finite(const Dual<Real>& x) noexcept;

template <class Real>
class Dual {
public:
    using value_type = Real;

    constexpr Dual() = default;

    // Lifted constants have width 0 and broadcast against any width.
    Dual(double constant) : value_(constant) {}
    template <class R = Real>
        requires(!std::is_same_v<R, double>)
    Dual(const Real& constant) : value_(constant)
    {
    }

    Dual(const Real& value, std::span<const Real> tangents) : value_(value), width_(tangents.size())
    {
        if (width_ > kMaxDirections) {
            throw std::invalid_argument("ad: at most " + std::to_string(kMaxDirections) + " tangent directions");
        }
        for (std::size_t i = 0; i < width_; ++i) {
            tangent_[i] = tangents[i];
        }
    }

    // The index-th of `width` independent variables: tangent is e_index.
    static Dual variable(const Real& value, std::size_t index, std::size_t width)
    {
        if (width == 0 || width > kMaxDirections || index >= width) {
            throw std::invalid_argument("ad: bad seed index/width");
        }
        Dual d(value);
        d.width_ = width;
        d.tangent_[index] = Real(1.0);
        return d;
    }

    const Real& value() const noexcept { return value_; }
    std::size_t width() const noexcept { return width_; }
    bool is_constant() const noexcept { return width_ == 0; }

    Real tangent(std::size_t i) const { return i < width_ ? tangent_[i] : Real(0.0); }
    std::span<const Real> tangents() const noexcept { return {tangent_.data(), width_}; }

    Dual operator-() const
    {
        Dual r(-value_);
        r.width_ = width_;
        for (std::size_t i = 0; i < width_; ++i) {
            r.tangent_[i] = -tangent_[i];
        }
        return r;
    }

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }

    // Builds a result whose tangent is (a.t * da + b.t * db); the shared
    // kernel behind every operation.
    static Dual combine(const Real& value, const Dual& a, const Real& da, const Dual& b, const Real& db,
                        const char* op)
    {
        Dual r(value);
        r.width_ = merged_width(a.width_, b.width_);
        for (std::size_t i = 0; i < r.width_; ++i) {
            r.tangent_[i] = a.tangent_[i] * da + b.tangent_[i] * db;
        }
        return r.checked(op, primal(a.value_));
    }

    static Dual chain(const Real& value, const Dual& a, const Real& da, const char* op)
    {
        Dual r(value);
        r.width_ = a.width_;
        for (std::size_t i = 0; i < r.width_; ++i) {
            r.tangent_[i] = a.tangent_[i] * da;
        }
        return r.checked(op, primal(a.value_));
    }

    friend Dual operator+(const Dual& a, const Dual& b)
    {
        return combine(a.value_ + b.value_, a, Real(1.0), b, Real(1.0), "add");
    }
    friend Dual operator-(const Dual& a, const Dual& b)
    {
        return combine(a.value_ - b.value_, a, Real(1.0), b, Real(-1.0), "subtract");
    }
    friend Dual operator*(const Dual& a, const Dual& b)
    {
        return combine(a.value_ * b.value_, a, b.value_, b, a.value_, "multiply");
    }
    friend Dual operator/(const Dual& a, const Dual& b)
    {
        if (primal(b.value_) == 0.0) {
            throw DomainError("divide", primal(a.value_));
        }
        const Real inv = Real(1.0) / b.value_;
        const Real q = a.value_ / b.value_;
        return combine(q, a, inv, b, -q * inv, "divide");
    }

    friend Dual operator+(const Dual& a, double b) { return a + Dual(b); }
    friend Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
    friend Dual operator-(const Dual& a, double b) { return a - Dual(b); }
    friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
    friend Dual operator*(const Dual& a, double b) { return a * Dual(b); }
    friend Dual operator*(double a, const Dual& b) { return Dual(a) * b; }
    friend Dual operator/(const Dual& a, double b) { return a / Dual(b); }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

private:
    static std::size_t merged_width(std::size_t a, std::size_t b)
    {
        if (a == 0) {
            return b;
        }
        if (b == 0 || a == b) {
            return a;
        }
        throw WidthMismatch(a, b);
    }

    Dual checked(const char* op, double argument) const
    {
        if (!all_finite(*this)) {
            throw DomainError(op, argument);
        }
        return *this;
    }

    template <class R>
    friend bool all_finite(const Dual<R>& x) noexcept;

    Real value_{};
    std::array<Real, kMaxDirections> tangent_{};
    std::size_t width_ = 0;
};

template <class Real>
bool all_finite(const Dual<Real>& x) noexcept
{
    if (!all_finite(x.value_)) {
        return false;
    }
    for (std::size_t i = 0; i < x.width_; ++i) {
        if (!all_finite(x.tangent_[i])) {
            return false;
        }
    }
    return true;
}

// Seeds values.size() independent variables; variable i carries e_i.
inline std::vector<Dual<>> seed(std::span<const double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("ad: seed requires at least one value");
    }
    std::vector<Dual<>> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back(Dual<>::variable(values[i], i, values.size()));
    }
    return out;
}

inline std::vector<Dual<>> seed(std::initializer_list<double> values)
{
    return seed(std::span<const double>(values.begin(), values.size()));
}

// --- elementary functions -------------------------------------------------

template <class Real>
Dual<Real> exp(const Dual<Real>& a)
{
    using std::exp;
    const Real e = exp(a.value());
    return Dual<Real>::chain(e, a, e, "exp");
}

template <class Real>
Dual<Real> log(const Dual<Real>& a)
{
    using std::log;
    if (!(primal(a.value()) > 0.0)) {
        throw DomainError("log", primal(a.value()));
    }
    return Dual<Real>::chain(log(a.value()), a, Real(1.0) / a.value(), "log");
}

template <class Real>
Dual<Real> sqrt(const Dual<Real>& a)
{
    using std::sqrt;
    const double p = primal(a.value());
    if (p < 0.0 || (p == 0.0 && !a.is_constant())) {
        throw DomainError("sqrt", p);
    }
    const Real s = sqrt(a.value());
    if (a.is_constant()) {
        return Dual<Real>(s);
    }
    return Dual<Real>::chain(s, a, Real(0.5) / s, "sqrt");
}

template <class Real>
Dual<Real> cbrt(const Dual<Real>& a)
{
    using std::cbrt;
    const double p = primal(a.value());
    if (p == 0.0 && !a.is_constant()) {
        throw DomainError("cbrt", p);
    }
    const Real c = cbrt(a.value());
    if (a.is_constant()) {
        return Dual<Real>(c);
    }
    return Dual<Real>::chain(c, a, Real(1.0) / (Real(3.0) * c * c), "cbrt");
}

template <class Real>
Dual<Real> pow(const Dual<Real>& a, double k)
{
    using std::pow;
    const double p = primal(a.value());
    if (p < 0.0 && k != std::floor(k)) {
        throw DomainError("pow", p);
    }
    if (p == 0.0 && k < 1.0 && !a.is_constant()) {
        throw DomainError("pow", p);
    }
    const Real v = pow(a.value(), k);
    if (k == 0.0) {
        return Dual<Real>(v);
    }
    return Dual<Real>::chain(v, a, Real(k) * pow(a.value(), k - 1.0), "pow");
}

template <class Real>
Dual<Real> abs(const Dual<Real>& a)
{
    // Derivative at 0 taken from the non-negative branch.
    return primal(a.value()) < 0.0 ? -a : a;
}

template <class Real>
Dual<Real> sin(const Dual<Real>& a)
{
    using std::cos;
    using std::sin;
    return Dual<Real>::chain(sin(a.value()), a, cos(a.value()), "sin");
}

template <class Real>
Dual<Real> cos(const Dual<Real>& a)
{
    using std::cos;
    using std::sin;
    return Dual<Real>::chain(cos(a.value()), a, -sin(a.value()), "cos");
}

template <class Real>
Dual<Real> acos(const Dual<Real>& a)
{
    using std::acos;
    using std::sqrt;
    const double p = primal(a.value());
    if (p < -1.0 || p > 1.0 || ((p == -1.0 || p == 1.0) && !a.is_constant())) {
        throw DomainError("acos", p);
    }
    const Real v = acos(a.value());
    if (a.is_constant()) {
        return Dual<Real>(v);
    }
    return Dual<Real>::chain(v, a, Real(-1.0) / sqrt(Real(1.0) - a.value() * a.value()), "acos");
}

// --- branch selection on primal values ------------------------------------

template <class S>
S select(bool cond, const S& a, const S& b)
{
    return cond ? a : b;
}

// Ties return the first argument.
template <class S>
S min(const S& a, const S& b)
{
    return select(!(primal(b) < primal(a)), a, b);
}

template <class S>
S max(const S& a, const S& b)
{
    return select(!(primal(b) > primal(a)), a, b);
}

template <class Real>
std::ostream& operator<<(std::ostream& os, const Dual<Real>& d)
{
    os << "dual(" << d.value() << ", [";
    for (std::size_t i = 0; i < d.width(); ++i) {
        os << (i ? ", " : "") << d.tangent(i);
    }
    return os << "])";
}

} // namespace difftherm::ad
