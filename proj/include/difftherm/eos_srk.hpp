#pragma once

// Soave-Redlich-Kwong equation of state, generic over the scalar type.
//
// Every function here accepts double or ad::Dual<...>. Branches (cubic
// discriminant case, phase-root choice) are decided on primal values, so a
// Dual evaluation differentiates exactly the expression that was selected.
//
// Conventions that differ from some textbook statements of SRK:
//   - the attraction prefactor is 0.42728 (not 0.42748);
//   - B = b_m P / (R T);
//   - ln(phi_i) uses the component-indexed partial form
//       (b_i/b_m)(z-1) - ln(z-B) - (A/B)(2 sum_j y_j a_ij / a_m - b_i/b_m) ln(1 + B/z),
//     which for one component reduces to (z-1) - ln(z-B) - (A/B) ln(1 + B/z).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/dual.hpp"
#include "difftherm/property_db.hpp"

namespace difftherm::eos {

inline constexpr double kOmegaA = 0.42728;
inline constexpr double kOmegaB = 0.08664;

enum class Phase { liquid, vapor };
enum class RootCount { one, three };

const char* to_string(Phase p) noexcept;
const char* to_string(RootCount c) noexcept;

/// No compressibility root exceeds B: the requested state is infeasible.
class NoPhysicalRoot : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct MixtureState {
    double T = 0.0; // K
    double P = 0.0; // Pa
    std::vector<double> z;

    /// Throws ValidationError unless T, P > 0, z_i >= 0 and |sum z - 1| <= 1e-12.
    void validate(std::size_t expected_components) const;
};

template <class S>
std::vector<S> lift(std::span<const double> values)
{
    return std::vector<S>(values.begin(), values.end());
}

// --- pure-component parameters ---------------------------------------------

template <class S>
S kappa(const S& omega)
{
    return 0.48 + 1.574 * omega - 0.176 * omega * omega;
}

template <class S, class K>
S alpha(const S& reduced_temperature, const K& kappa_value)
{
    using std::sqrt;
    const S root = 1.0 + kappa_value * (1.0 - sqrt(reduced_temperature));
    return root * root;
}

template <class S>
struct PureParameters {
    S a; // Pa m^6 / mol^2
    S b; // m^3 / mol
};

template <class S>
PureParameters<S> pure_ab(const Component& c, const S& T)
{
    const double R = kGasConstant;
    const double a_critical = kOmegaA * R * R * c.tc * c.tc / c.pc;
    return {a_critical * alpha(T / c.tc, kappa(c.omega)), S(kOmegaB * R * c.tc / c.pc)};
}

// --- mixture ---------------------------------------------------------------

template <class S>
struct MixParameters {
    S a_m;
    S b_m;
    std::vector<S> a_row; // sum_j y_j a_ij, used by the partial fugacity form
};

template <class S>
MixParameters<S> mix(std::span<const S> a_pure, std::span<const S> b_pure, std::span<const S> y, const BinarySet& k)
{
    using std::sqrt;
    const std::size_t n = y.size();
    if (a_pure.size() != n || b_pure.size() != n) {
        throw std::invalid_argument("mix: parameter and composition lengths differ");
    }
    std::vector<S> root_a(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (ad::primal(a_pure[i]) < 0.0) {
            throw ad::DomainError("mix: sqrt of negative a_i", ad::primal(a_pure[i]));
        }
        root_a[i] = sqrt(a_pure[i]);
    }
    MixParameters<S> m{S(0.0), S(0.0), std::vector<S>(n, S(0.0))};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            // The diagonal uses a_i itself so a single component mixes to exactly a_1.
            const S a_ij = i == j ? a_pure[i] : root_a[i] * root_a[j] * (1.0 - (k.size() ? k(i, j) : 0.0));
            m.a_row[i] += y[j] * a_ij;
        }
        m.a_m += y[i] * m.a_row[i];
        m.b_m += y[i] * b_pure[i];
    }
    return m;
}

template <class S>
struct DimensionlessAB {
    S A;
    S B;
};

template <class S>
DimensionlessAB<S> dimensionless_ab(const S& a_m, const S& b_m, const S& T, const S& P)
{
    const S RT = kGasConstant * T;
    return {a_m * P / (RT * RT), b_m * P / RT};
}

// --- cubic in z ------------------------------------------------------------

template <class S>
struct CubicRoots {
    std::vector<S> roots;            // distinct real roots, ascending
    RootCount count = RootCount::one;
    std::vector<S> phase_candidates; // roots usable as phases: the simple root when count is one
    double discriminant = 0.0;       // Shengjin's Delta on primal values
};

template <class S>
S cubic_value(const S& z, const S& A, const S& B)
{
    return ((z - 1.0) * z + (A - B - B * B)) * z - A * B;
}

namespace detail {

// One Newton step on a simple root. At an exact root the step leaves the
// value unchanged and its tangent equals the implicit derivative -p_theta/p_z;
// in floating point it removes the cancellation left by the closed form.
template <class S>
S polish_root(const S& z, const S& A, const S& B)
{
    const S slope = (3.0 * z - 2.0) * z + (A - B - B * B);
    if (std::abs(ad::primal(slope)) < 1e-10) {
        return z;
    }
    const S refined = z - cubic_value(z, A, B) / slope;
    const double before = std::abs(ad::primal(cubic_value(z, A, B)));
    const double after = std::abs(ad::primal(cubic_value(refined, A, B)));
    return after <= before ? refined : z;
}

} // namespace detail

/// Real roots of z^3 - z^2 + (A - B - B^2) z - A B = 0 by Shengjin's
/// discriminant cases. |Delta| below a relative 1e-13 is the repeated-root
/// case; the repeated root is reported but is not a phase candidate.
template <class S>
CubicRoots<S> cubic_roots(const S& A, const S& B)
{
    using std::acos;
    using std::cbrt;
    using std::cos;
    using std::sin;
    using std::sqrt;
    if (!std::isfinite(ad::primal(A)) || !std::isfinite(ad::primal(B))) {
        throw ad::DomainError("cubic_roots: non-finite coefficient", ad::primal(A));
    }

    // a z^3 + b z^2 + c z + d with a = 1, b = -1.
    const S c = A - B - B * B;
    const S d = -(A * B);
    const S sa = 1.0 - 3.0 * c;     // b^2 - 3ac
    const S sb = -c - 9.0 * d;      // bc - 9ad
    const S sc = c * c + 3.0 * d;   // c^2 - 3bd
    const S delta = sb * sb - 4.0 * sa * sc;

    const double p_sa = ad::primal(sa);
    const double p_sb = ad::primal(sb);
    const double p_delta = ad::primal(delta);
    const double scale = p_sb * p_sb + 4.0 * std::abs(p_sa * ad::primal(sc));

    CubicRoots<S> out;
    out.discriminant = p_delta;

    if (p_sa == 0.0 && p_sb == 0.0) {
        const S triple(1.0 / 3.0);
        out.roots = {triple};
        out.phase_candidates = {triple};
        out.count = RootCount::one;
        return out;
    }

    if (std::abs(p_delta) <= 1e-13 * scale) {
        const S k = sb / sa;
        const S simple = detail::polish_root(1.0 + k, A, B);
        const S repeated = -k / 2.0;
        out.roots = ad::primal(repeated) < ad::primal(simple) ? std::vector<S>{repeated, simple}
                                                              : std::vector<S>{simple, repeated};
        out.phase_candidates = {simple};
        out.count = RootCount::one;
        return out;
    }

    if (p_delta > 0.0) {
        const S root_delta = sqrt(delta);
        const S y1 = -sa + 1.5 * (-sb + root_delta);
        const S y2 = -sa + 1.5 * (-sb - root_delta);
        const S x1 = detail::polish_root((1.0 - (cbrt(y1) + cbrt(y2))) / 3.0, A, B);
        out.roots = {x1};
        out.phase_candidates = {x1};
        out.count = RootCount::one;
        return out;
    }

    const S root_sa = sqrt(sa);
    const S t = (-2.0 * sa - 3.0 * sb) / (2.0 * sa * root_sa);
    const S third = acos(ad::max(S(-1.0), ad::min(t, S(1.0)))) / 3.0;
    const S cos3 = cos(third);
    const S sin3 = sin(third);
    std::vector<S> roots = {
        detail::polish_root((1.0 - 2.0 * root_sa * cos3) / 3.0, A, B),
        detail::polish_root((1.0 + root_sa * (cos3 + std::sqrt(3.0) * sin3)) / 3.0, A, B),
        detail::polish_root((1.0 + root_sa * (cos3 - std::sqrt(3.0) * sin3)) / 3.0, A, B),
    };
    std::sort(roots.begin(), roots.end(),
              [](const S& l, const S& r) { return ad::primal(l) < ad::primal(r); });
    out.roots = roots;
    out.phase_candidates = roots;
    out.count = RootCount::three;
    return out;
}

template <class S>
struct PhaseRoots {
    S z_liq;
    S z_vap;
    RootCount count;
};

/// Smallest and largest candidate strictly above B.
template <class S>
PhaseRoots<S> select_phase_roots(std::span<const S> roots, const S& B)
{
    std::vector<S> physical;
    for (const S& r : roots) {
        if (ad::primal(r) > ad::primal(B)) {
            physical.push_back(r);
        }
    }
    if (physical.empty()) {
        throw NoPhysicalRoot("no compressibility root exceeds B = " + std::to_string(ad::primal(B)));
    }
    S lo = physical.front();
    S hi = physical.front();
    for (const S& r : physical) {
        lo = ad::min(lo, r);
        hi = ad::max(hi, r);
    }
    return {lo, hi, physical.size() == 1 ? RootCount::one : RootCount::three};
}

// --- phase properties ------------------------------------------------------

template <class S>
struct PhaseEvaluation {
    S A;
    S B;
    S a_m;
    S b_m;
    S z;
    std::vector<S> ln_phi;
    RootCount root_count = RootCount::one;
};

template <class S>
PhaseEvaluation<S> evaluate_phase(const PropertyPackage& pkg, const S& T, const S& P, std::span<const S> y,
                                  Phase phase)
{
    using std::log;
    const std::size_t n = pkg.size();
    if (y.size() != n) {
        throw std::invalid_argument("evaluate_phase: composition length " + std::to_string(y.size())
                                    + " != component count " + std::to_string(n));
    }
    std::vector<S> a(n);
    std::vector<S> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ab = pure_ab(pkg.components[i], T);
        a[i] = ab.a;
        b[i] = ab.b;
    }
    MixParameters<S> m = mix<S>(a, b, y, pkg.kij);
    DimensionlessAB<S> dim = dimensionless_ab(m.a_m, m.b_m, T, P);
    CubicRoots<S> cubic = cubic_roots(dim.A, dim.B);
    PhaseRoots<S> chosen = select_phase_roots<S>(cubic.phase_candidates, dim.B);

    PhaseEvaluation<S> out;
    out.A = dim.A;
    out.B = dim.B;
    out.a_m = m.a_m;
    out.b_m = m.b_m;
    out.z = phase == Phase::liquid ? chosen.z_liq : chosen.z_vap;
    out.root_count = chosen.count;

    const S log_free_volume = log(out.z - dim.B);
    const S log_repulsion = log(1.0 + dim.B / out.z);
    const S ab_ratio = dim.A / dim.B;
    out.ln_phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const S b_ratio = b[i] / m.b_m;
        out.ln_phi[i] = b_ratio * (out.z - 1.0) - log_free_volume
                        - ab_ratio * (2.0 * m.a_row[i] / m.a_m - b_ratio) * log_repulsion;
    }
    return out;
}

template <class S>
std::vector<S> fugacity_coeffs(const PropertyPackage& pkg, const S& T, const S& P, std::span<const S> y, Phase phase)
{
    using std::exp;
    std::vector<S> phi = evaluate_phase(pkg, T, P, y, phase).ln_phi;
    for (S& v : phi) {
        v = exp(v);
    }
    return phi;
}

/// d a_m / dT at fixed composition, by a nested forward sweep over T.
template <class S>
S attraction_temperature_slope(const PropertyPackage& pkg, const S& T, std::span<const S> y)
{
    using D = ad::Dual<S>;
    const std::size_t n = pkg.size();
    const D t = D::variable(T, 0, 1);
    std::vector<D> a(n);
    std::vector<D> b(n);
    std::vector<D> yd(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ab = pure_ab(pkg.components[i], t);
        a[i] = ab.a;
        b[i] = ab.b;
        yd[i] = D(y[i]);
    }
    return mix<D>(a, b, yd, pkg.kij).a_m.tangent(0);
}

/// h - h_ig = R T (z - 1) + (T da_m/dT - a_m)/b_m * ln(1 + B/z), J/mol.
template <class S>
S enthalpy_departure(const PropertyPackage& pkg, const S& T, const S& P, std::span<const S> y, Phase phase)
{
    using std::log;
    const PhaseEvaluation<S> e = evaluate_phase(pkg, T, P, y, phase);
    const S slope = attraction_temperature_slope(pkg, T, y);
    return kGasConstant * T * (e.z - 1.0) + (T * slope - e.a_m) / e.b_m * log(1.0 + e.B / e.z);
}

template <class S>
S ideal_gas_mixture_enthalpy(const PropertyPackage& pkg, const S& T, std::span<const S> y)
{
    S h(0.0);
    for (std::size_t i = 0; i < pkg.size(); ++i) {
        h += y[i] * ideal_gas_enthalpy(pkg.components[i], T);
    }
    return h;
}

/// Absolute molar enthalpy of one phase, J/mol.
template <class S>
S phase_enthalpy(const PropertyPackage& pkg, const S& T, const S& P, std::span<const S> y, Phase phase)
{
    return ideal_gas_mixture_enthalpy(pkg, T, y) + enthalpy_departure(pkg, T, P, y, phase);
}

/// K_i = phi_liq,i(T, P, x) / phi_vap,i(T, P, y).
template <class S>
std::vector<S> k_values(const PropertyPackage& pkg, const S& T, const S& P, std::span<const S> x, std::span<const S> y)
{
    using std::exp;
    const PhaseEvaluation<S> liq = evaluate_phase(pkg, T, P, x, Phase::liquid);
    const PhaseEvaluation<S> vap = evaluate_phase(pkg, T, P, y, Phase::vapor);
    std::vector<S> K(pkg.size());
    for (std::size_t i = 0; i < K.size(); ++i) {
        K[i] = exp(liq.ln_phi[i] - vap.ln_phi[i]);
    }
    return K;
}

// --- plain-real conveniences -------------------------------------------------

struct EosEvaluation {
    double A = 0.0;
    double B = 0.0;
    double z_liq = 0.0;
    double z_vap = 0.0;
    std::vector<double> phi_liq;
    std::vector<double> phi_vap;
    double h_dep_liq = 0.0;
    double h_dep_vap = 0.0;
    RootCount root_count = RootCount::one;
};

EosEvaluation evaluate(const PropertyPackage& pkg, const MixtureState& state);

std::vector<double> k_values(const PropertyPackage& pkg, double T, double P, std::span<const double> x,
                             std::span<const double> y);

/// Differentiation variable for k_derivatives. Composition directions perturb
/// the raw mole number of one species in one phase, then renormalize.
struct Wrt {
    enum class Kind { temperature, pressure, liquid_moles, vapor_moles };
    Kind kind = Kind::temperature;
    std::size_t index = 0;

    static Wrt temperature() { return {Kind::temperature, 0}; }
    static Wrt pressure() { return {Kind::pressure, 0}; }
    static Wrt liquid_moles(std::size_t i) { return {Kind::liquid_moles, i}; }
    static Wrt vapor_moles(std::size_t i) { return {Kind::vapor_moles, i}; }
};

std::vector<double> k_derivatives(const PropertyPackage& pkg, double T, double P, std::span<const double> x,
                                  std::span<const double> y, Wrt wrt);

} // namespace difftherm::eos
