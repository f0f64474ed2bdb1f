#include "difftherm/eos_srk.hpp"

#include <cmath>
#include <numeric>

namespace difftherm::eos {

const char* to_string(Phase p) noexcept { return p == Phase::liquid ? "liquid" : "vapor"; }

const char* to_string(RootCount c) noexcept { return c == RootCount::one ? "one" : "three"; }

void MixtureState::validate(std::size_t expected_components) const
{
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ValidationError("state: temperature must be positive");
    }
    if (!(P > 0.0) || !std::isfinite(P)) {
        throw ValidationError("state: pressure must be positive");
    }
    if (z.size() != expected_components) {
        throw ValidationError("state: composition has " + std::to_string(z.size()) + " entries, expected "
                              + std::to_string(expected_components));
    }
    for (double zi : z) {
        if (!(zi >= 0.0) || !std::isfinite(zi)) {
            throw ValidationError("state: mole fractions must be non-negative");
        }
    }
    const double total = std::accumulate(z.begin(), z.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("state: mole fractions sum to " + std::to_string(total) + ", not 1");
    }
}

EosEvaluation evaluate(const PropertyPackage& pkg, const MixtureState& state)
{
    state.validate(pkg.size());
    const std::span<const double> z(state.z);
    const PhaseEvaluation<double> liq = evaluate_phase(pkg, state.T, state.P, z, Phase::liquid);
    const PhaseEvaluation<double> vap = evaluate_phase(pkg, state.T, state.P, z, Phase::vapor);

    EosEvaluation out;
    out.A = liq.A;
    out.B = liq.B;
    out.z_liq = liq.z;
    out.z_vap = vap.z;
    out.root_count = liq.root_count;
    for (std::size_t i = 0; i < pkg.size(); ++i) {
        out.phi_liq.push_back(std::exp(liq.ln_phi[i]));
        out.phi_vap.push_back(std::exp(vap.ln_phi[i]));
    }
    out.h_dep_liq = enthalpy_departure(pkg, state.T, state.P, z, Phase::liquid);
    out.h_dep_vap = enthalpy_departure(pkg, state.T, state.P, z, Phase::vapor);
    return out;
}

std::vector<double> k_values(const PropertyPackage& pkg, double T, double P, std::span<const double> x,
                             std::span<const double> y)
{
    return k_values<double>(pkg, T, P, x, y);
}

std::vector<double> k_derivatives(const PropertyPackage& pkg, double T, double P, std::span<const double> x,
                                  std::span<const double> y, Wrt wrt)
{
    using D = ad::Dual<>;
    const std::size_t n = pkg.size();
    if (x.size() != n || y.size() != n) {
        throw std::invalid_argument("k_derivatives: composition length mismatch");
    }
    D t(T);
    D p(P);
    std::vector<D> xd = lift<D>(x);
    std::vector<D> yd = lift<D>(y);

    const auto renormalized = [n](std::span<const double> raw, std::size_t seeded) {
        if (seeded >= n) {
            throw std::out_of_range("k_derivatives: composition index out of range");
        }
        std::vector<D> moles = lift<D>(raw);
        moles[seeded] = D::variable(raw[seeded], 0, 1);
        D total(0.0);
        for (const D& m : moles) {
            total += m;
        }
        for (D& m : moles) {
            m = m / total;
        }
        return moles;
    };

    switch (wrt.kind) {
    case Wrt::Kind::temperature:
        t = D::variable(T, 0, 1);
        break;
    case Wrt::Kind::pressure:
        p = D::variable(P, 0, 1);
        break;
    case Wrt::Kind::liquid_moles:
        xd = renormalized(x, wrt.index);
        break;
    case Wrt::Kind::vapor_moles:
        yd = renormalized(y, wrt.index);
        break;
    }

    const std::vector<D> K = k_values<D>(pkg, t, p, xd, yd);
    std::vector<double> dK(n);
    for (std::size_t i = 0; i < n; ++i) {
        dK[i] = K[i].tangent(0);
    }
    return dK;
}

} // namespace difftherm::eos
