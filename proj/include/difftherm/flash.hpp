#pragma once

// PT, PV and PH flash on top of the SRK package.
//
// Newton derivatives come from forward-mode AD (DerivativeMode::ad) or from
// a central finite difference with an explicit step (DerivativeMode::fd).
// Every Newton loop keeps a sign bracket and bisects whenever a step would
// leave it, so a poor derivative costs iterations rather than divergence.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "difftherm/dual.hpp"
#include "difftherm/eos_srk.hpp"
#include "difftherm/property_db.hpp"

namespace difftherm::flash {

enum class FlashKind { pt, pv, ph };
enum class PhaseState { two_phase, liquid, vapor };

const char* to_string(FlashKind k) noexcept;
const char* to_string(PhaseState s) noexcept;

struct DerivativeMode {
    enum class Kind { ad, fd };
    Kind kind = Kind::ad;
    double step = 0.0; // FD step in the differentiated variable's unit

    static DerivativeMode automatic() { return {Kind::ad, 0.0}; }
    static DerivativeMode finite_difference(double step);

    bool is_ad() const noexcept { return kind == Kind::ad; }
    std::string label() const;
};

struct FlashOptions {
    double rr_tolerance = 1e-10;          // |F(V)|
    double k_tolerance = 1e-10;           // max |d ln K| between successive substitutions
    double pv_tolerance = 1e-10;          // |F(T)|
    double composition_tolerance = 1e-10; // max |dx|, |dy| between PV outer passes
    double ph_relative_tolerance = 1e-6;  // |H_error| / max(1, |H_total|)
    int max_outer = 100;         // PV composition passes, PH Newton steps
    int max_substitutions = 1000; // PT successive-substitution passes
    int max_inner = 200;
    double t_min = 150.0; // K, PV/PH temperature bracket
    double t_max = 400.0;
    double min_derivative = 1e-14; // smaller |dF/dT| triggers bisection
    std::optional<double> initial_temperature;
    std::optional<std::vector<double>> initial_k;
    bool update_k = true;        // false: PT flash solves Rachford-Rice at the given K only
    bool negative_flash = false; // PT: solve Rachford-Rice on its whole feasible window, V unclamped
};

struct FlashSpec {
    FlashKind kind = FlashKind::pt;
    std::vector<double> feed;
    double P = 0.0;              // Pa
    double T = 0.0;              // K, PT only
    double vapor_fraction = 0.0; // PV only
    double feed_enthalpy = 0.0;  // J/mol, PH only
    double duty = 0.0;           // J/mol of feed, PH only
    DerivativeMode derivative = DerivativeMode::automatic();

    double total_enthalpy() const noexcept { return feed_enthalpy + duty; }

    static FlashSpec pt(std::vector<double> feed, double P, double T);
    static FlashSpec pv(std::vector<double> feed, double P, double V, DerivativeMode mode = DerivativeMode::automatic());
    static FlashSpec ph(std::vector<double> feed, double P, double feed_enthalpy, double duty,
                        DerivativeMode mode = DerivativeMode::automatic());

    /// Throws ValidationError unless the fields of `kind` are set and consistent.
    void validate(std::size_t components) const;
};

struct TraceEntry {
    int iteration = 0;
    double iterate = 0.0;  // V for PT, T for PV and PH
    double residual = 0.0; // PT: max |d ln K|; PV: |F(T)|; PH: |H_error| / max(1, |H_total|)
};

struct FlashResult {
    FlashKind kind = FlashKind::pt;
    double V = 0.0;
    double T = 0.0;
    double P = 0.0;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> K;
    int inner_iters = 0;
    int outer_iters = 0;
    int newton_iters = 0; // Newton steps driven by the derivative mode (PT: on V, PV/PH: on T)
    std::vector<TraceEntry> residual_trace;
    bool converged = false;
    PhaseState phase_state = PhaseState::two_phase;
    double total_enthalpy = 0.0;  // PH
    double outlet_enthalpy = 0.0; // PH
};

class InfeasibleVaporFraction : public std::domain_error {
public:
    InfeasibleVaporFraction(std::size_t index, double V);
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class NoSolution : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FlashError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- phase generation ------------------------------------------------------

template <class S>
struct PhaseCompositions {
    std::vector<S> x;
    std::vector<S> y;
};

/// x_i = z_i / ((K_i - 1) V + 1), y_i = K_i x_i.
template <class S>
PhaseCompositions<S> phase_split(std::span<const double> z, std::span<const S> K, const S& V)
{
    if (K.size() != z.size()) {
        throw std::invalid_argument("phase_split: K and z lengths differ");
    }
    PhaseCompositions<S> out{std::vector<S>(z.size()), std::vector<S>(z.size())};
    for (std::size_t i = 0; i < z.size(); ++i) {
        const S denominator = (K[i] - 1.0) * V + 1.0;
        if (!(ad::primal(denominator) > 0.0)) {
            throw InfeasibleVaporFraction(i, ad::primal(V));
        }
        out.x[i] = z[i] / denominator;
        out.y[i] = K[i] * out.x[i];
    }
    return out;
}

/// F(V) = sum_i z_i (K_i - 1) / ((K_i - 1) V + 1).
template <class S>
S rachford_rice_residual(std::span<const double> z, std::span<const S> K, const S& V)
{
    if (K.size() != z.size()) {
        throw std::invalid_argument("rachford_rice_residual: K and z lengths differ");
    }
    S F(0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const S denominator = (K[i] - 1.0) * V + 1.0;
        if (!(ad::primal(denominator) > 0.0)) {
            throw InfeasibleVaporFraction(i, ad::primal(V));
        }
        F += z[i] * (K[i] - 1.0) / denominator;
    }
    return F;
}

/// The same residual written as sum_i (y_i - x_i) over phase_split.
double summation_residual(std::span<const double> z, std::span<const double> K, double V);

/// dF/dV by a one-direction forward sweep.
double rachford_rice_slope(std::span<const double> z, std::span<const double> K, double V);

/// Vapor fraction as a function of K at a converged Rachford-Rice root:
/// value V, tangent dV = -(dF/dK . dK) / (dF/dV).
template <class S>
S implicit_vapor_fraction(std::span<const double> z, std::span<const S> K, double V)
{
    std::vector<double> k_primal(K.size());
    for (std::size_t i = 0; i < K.size(); ++i) {
        k_primal[i] = ad::primal(K[i]);
    }
    const S F = rachford_rice_residual<S>(z, K, S(V));
    const double slope = rachford_rice_slope(z, k_primal, V);
    return S(V) + (F - ad::primal(F)) * (-1.0 / slope);
}

struct RachfordRiceSolution {
    double V = 0.0;
    int iterations = 0;
    bool converged = false;
    PhaseState state = PhaseState::two_phase;
};

RachfordRiceSolution solve_rachford_rice(std::span<const double> z, std::span<const double> K,
                                         const FlashOptions& options = {},
                                         DerivativeMode mode = DerivativeMode::automatic(),
                                         std::vector<TraceEntry>* trace = nullptr);

/// Wilson estimate K_i = (Pc_i / P) exp(5.373 (1 + w_i)(1 - Tc_i / T)).
std::vector<double> wilson_k(const PropertyPackage& pkg, double T, double P);

// --- flashes ---------------------------------------------------------------

FlashResult flash_pt(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options = {});
FlashResult flash_pv(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options = {});
FlashResult flash_ph(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options = {});
FlashResult run_flash(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options = {});

// --- PV building blocks ----------------------------------------------------

/// Starting phase compositions for a PV solve at temperature T: Wilson K,
/// phase_split at the target V, each phase renormalized.
PhaseCompositions<double> pv_initial_compositions(const PropertyPackage& pkg, std::span<const double> z, double T,
                                                  double P, double V);

/// F(T) with the phase compositions held fixed.
double pv_residual(const PropertyPackage& pkg, std::span<const double> z, double T, double P, double V,
                   std::span<const double> x, std::span<const double> y);

/// dF/dT at fixed phase compositions by the requested derivative mode.
double pv_residual_slope(const PropertyPackage& pkg, std::span<const double> z, double T, double P, double V,
                         std::span<const double> x, std::span<const double> y, DerivativeMode mode);

// --- PH building blocks ----------------------------------------------------

/// Molar enthalpy of the equilibrium outlet at (T, P): PT flash, then
/// (1 - V) h_L(x) + V h_V(y), or the single phase's h(z).
double outlet_enthalpy(const PropertyPackage& pkg, std::span<const double> z, double T, double P,
                       const FlashOptions& options = {});

struct EnthalpySlope {
    double enthalpy = 0.0;
    double slope = 0.0; // dH_out / dT, J/(mol K)
    FlashResult pt;
};

/// Outlet enthalpy and its total temperature derivative. The PT fixed point
/// K = Phi(T, K) is differentiated implicitly: dK/dT = (I - Phi_K)^-1 Phi_T,
/// with V following K through the Rachford-Rice root.
EnthalpySlope outlet_enthalpy_with_slope(const PropertyPackage& pkg, std::span<const double> z, double T, double P,
                                         const FlashOptions& options = {});

/// Enthalpy of a feed stream at its own (T, P), as an equilibrium mixture.
double feed_enthalpy(const PropertyPackage& pkg, std::span<const double> z, double T, double P);

} // namespace difftherm::flash
