#include "difftherm/flash.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "difftherm/findiff.hpp"

namespace difftherm::flash {

using eos::Phase;
using Dual = ad::Dual<>;

const char* to_string(FlashKind k) noexcept
{
    switch (k) {
    case FlashKind::pt:
        return "pt";
    case FlashKind::pv:
        return "pv";
    case FlashKind::ph:
        return "ph";
    }
    return "?";
}

const char* to_string(PhaseState s) noexcept
{
    switch (s) {
    case PhaseState::two_phase:
        return "two-phase";
    case PhaseState::liquid:
        return "liquid";
    case PhaseState::vapor:
        return "vapor";
    }
    return "?";
}

DerivativeMode DerivativeMode::finite_difference(double step)
{
    findiff::FdScheme::central(step).validate();
    return {Kind::fd, step};
}

std::string DerivativeMode::label() const
{
    if (is_ad()) {
        return "ad";
    }
    std::ostringstream os;
    os << "fd(" << step << ")";
    return os.str();
}

InfeasibleVaporFraction::InfeasibleVaporFraction(std::size_t index, double V)
    : std::domain_error("phase split infeasible at V = " + std::to_string(V) + ": (K_i - 1) V + 1 <= 0 for component "
                        + std::to_string(index)),
      index_(index)
{
}

FlashSpec FlashSpec::pt(std::vector<double> feed, double P, double T)
{
    FlashSpec s;
    s.kind = FlashKind::pt;
    s.feed = std::move(feed);
    s.P = P;
    s.T = T;
    return s;
}

FlashSpec FlashSpec::pv(std::vector<double> feed, double P, double V, DerivativeMode mode)
{
    FlashSpec s;
    s.kind = FlashKind::pv;
    s.feed = std::move(feed);
    s.P = P;
    s.vapor_fraction = V;
    s.derivative = mode;
    return s;
}

FlashSpec FlashSpec::ph(std::vector<double> feed, double P, double feed_enthalpy, double duty, DerivativeMode mode)
{
    FlashSpec s;
    s.kind = FlashKind::ph;
    s.feed = std::move(feed);
    s.P = P;
    s.feed_enthalpy = feed_enthalpy;
    s.duty = duty;
    s.derivative = mode;
    return s;
}

void FlashSpec::validate(std::size_t components) const
{
    eos::MixtureState state{kind == FlashKind::pt ? T : 300.0, P, feed};
    state.validate(components);
    switch (kind) {
    case FlashKind::pt:
        break;
    case FlashKind::pv:
        if (!(vapor_fraction >= 0.0 && vapor_fraction <= 1.0)) {
            throw ValidationError("PV flash: vapor fraction must lie in [0, 1]");
        }
        break;
    case FlashKind::ph:
        if (!std::isfinite(feed_enthalpy) || !std::isfinite(duty)) {
            throw ValidationError("PH flash: feed enthalpy and duty must be finite");
        }
        break;
    }
    if (!derivative.is_ad()) {
        findiff::FdScheme::central(derivative.step).validate();
    }
}

// --- Rachford-Rice ---------------------------------------------------------

double summation_residual(std::span<const double> z, std::span<const double> K, double V)
{
    const PhaseCompositions<double> split = phase_split<double>(z, K, V);
    double F = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        F += split.y[i] - split.x[i];
    }
    return F;
}

double rachford_rice_slope(std::span<const double> z, std::span<const double> K, double V)
{
    const std::vector<Dual> k = eos::lift<Dual>(K);
    return rachford_rice_residual<Dual>(z, k, Dual::variable(V, 0, 1)).tangent(0);
}

namespace {

struct NewtonOutcome {
    double root = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Newton on f over a sign bracket [lo, hi]. eval(x) returns {f, df}; steps
// leaving the bracket, taken with |df| < min_slope, or following two Newton
// steps in a row that each failed to halve |f| fall back to bisection.
template <class Eval, class OnStep>
NewtonOutcome safeguarded_newton(Eval&& eval, double lo, double hi, double lo_sign, double x, double tolerance,
                                 int max_iterations, double min_slope, OnStep&& on_step)
{
    NewtonOutcome out;
    x = std::clamp(x, lo, hi);
    double previous_f = std::numeric_limits<double>::infinity();
    bool last_was_newton = false;
    int weak_steps = 0;
    for (int it = 1; it <= max_iterations; ++it) {
        const auto [f, df] = eval(x);
        weak_steps = last_was_newton && std::abs(f) > 0.5 * previous_f ? weak_steps + 1 : 0;
        const bool stalled = weak_steps >= 2;
        previous_f = std::abs(f);
        out.iterations = it;
        out.root = x;
        on_step(it, x, f);
        if (std::abs(f) < tolerance) {
            out.converged = true;
            return out;
        }
        if ((f > 0.0) == (lo_sign > 0.0)) {
            lo = x;
        } else {
            hi = x;
        }
        double next = x - f / df;
        const bool usable = !stalled && std::isfinite(next) && std::abs(df) >= min_slope && next > lo && next < hi;
        if (!usable) {
            next = 0.5 * (lo + hi);
        }
        last_was_newton = usable;
        if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            return out;
        }
        x = next;
    }
    return out;
}

double rr_slope_for(std::span<const double> z, std::span<const double> K, double V, DerivativeMode mode)
{
    if (mode.is_ad()) {
        return rachford_rice_slope(z, K, V);
    }
    return findiff::fd_derivative([&](double v) { return rachford_rice_residual<double>(z, K, v); }, V,
                                  findiff::FdScheme::central(mode.step));
}

std::vector<double> normalized(std::vector<double> v)
{
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& e : v) {
        e /= total;
    }
    return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace

RachfordRiceSolution solve_rachford_rice(std::span<const double> z, std::span<const double> K,
                                         const FlashOptions& options, DerivativeMode mode,
                                         std::vector<TraceEntry>* trace)
{
    RachfordRiceSolution out;
    const double k_max = *std::max_element(K.begin(), K.end());
    const double k_min = *std::min_element(K.begin(), K.end());

    double lo = 0.0;
    double hi = 1.0;
    if (options.negative_flash && k_max > 1.0 && k_min < 1.0) {
        // Open window where every (K_i - 1) V + 1 stays positive.
        const double left = 1.0 / (1.0 - k_max);
        const double right = 1.0 / (1.0 - k_min);
        const double margin = 1e-12 * (right - left);
        lo = left + margin;
        hi = right - margin;
    } else {
        const double f0 = rachford_rice_residual<double>(z, K, 0.0);
        const double f1 = rachford_rice_residual<double>(z, K, 1.0);
        if (f0 <= 0.0) {
            out.V = 0.0;
            out.state = PhaseState::liquid;
            out.converged = true;
            return out;
        }
        if (f1 >= 0.0) {
            out.V = 1.0;
            out.state = PhaseState::vapor;
            out.converged = true;
            return out;
        }
    }

    const auto eval = [&](double v) {
        return std::pair{rachford_rice_residual<double>(z, K, v), rr_slope_for(z, K, v, mode)};
    };
    int base = trace ? static_cast<int>(trace->size()) : 0;
    const NewtonOutcome newton = safeguarded_newton(
        eval, lo, hi, 1.0, 0.5 * (lo + hi), options.rr_tolerance, options.max_inner, options.min_derivative,
        [&](int it, double v, double f) {
            if (trace) {
                trace->push_back({base + it, v, std::abs(f)});
            }
        });
    out.V = newton.root;
    out.iterations = newton.iterations;
    out.converged = newton.converged;
    out.state = out.V <= 0.0 ? PhaseState::liquid : (out.V >= 1.0 ? PhaseState::vapor : PhaseState::two_phase);
    return out;
}

std::vector<double> wilson_k(const PropertyPackage& pkg, double T, double P)
{
    std::vector<double> K(pkg.size());
    for (std::size_t i = 0; i < K.size(); ++i) {
        const Component& c = pkg.components[i];
        K[i] = c.pc / P * std::exp(5.373 * (1.0 + c.omega) * (1.0 - c.tc / T));
    }
    return K;
}

// --- PT --------------------------------------------------------------------

namespace {

// Kay's-rule pseudo-critical temperature, used only to label a trivial
// (K == 1) solution as liquid or vapor.
double pseudo_critical_temperature(const PropertyPackage& pkg, std::span<const double> z)
{
    double t = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        t += z[i] * pkg.components[i].tc;
    }
    return t;
}

// Phase compositions reported for a Rachford-Rice solution. Two-phase (and
// negative-flash) results keep phase_split unnormalized so the material
// balance is exact; clamped single-phase results report the feed for the
// present phase and the normalized incipient composition for the other.
PhaseCompositions<double> reported_split(std::span<const double> z, std::span<const double> K,
                                         const RachfordRiceSolution& rr, bool negative_flash)
{
    PhaseCompositions<double> split = phase_split<double>(z, K, rr.V);
    if (rr.state == PhaseState::two_phase || negative_flash) {
        return split;
    }
    split.x = normalized(std::move(split.x));
    split.y = normalized(std::move(split.y));
    return split;
}

} // namespace

FlashResult flash_pt(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options)
{
    if (spec.kind != FlashKind::pt) {
        throw std::invalid_argument("flash_pt: spec is not a PT flash");
    }
    spec.validate(pkg.size());
    const std::span<const double> z(spec.feed);

    FlashResult result;
    result.kind = FlashKind::pt;
    result.T = spec.T;
    result.P = spec.P;

    std::vector<double> K = options.initial_k ? *options.initial_k : wilson_k(pkg, spec.T, spec.P);
    if (K.size() != pkg.size()) {
        throw ValidationError("flash_pt: initial K has wrong length");
    }

    bool trivial = false;
    if (!options.update_k) {
        std::vector<TraceEntry> trace;
        const RachfordRiceSolution rr = solve_rachford_rice(z, K, options, spec.derivative, &trace);
        result.inner_iters = result.newton_iters = rr.iterations;
        result.outer_iters = 1;
        result.converged = rr.converged;
        result.residual_trace = trace.empty() ? std::vector<TraceEntry>{{1, rr.V, 0.0}} : trace;
    } else {
        for (int outer = 1; outer <= options.max_substitutions; ++outer) {
            const RachfordRiceSolution rr = solve_rachford_rice(z, K, options, spec.derivative);
            result.inner_iters += rr.iterations;
            result.outer_iters = outer;
            if (!rr.converged) {
                break;
            }
            const PhaseCompositions<double> split = phase_split<double>(z, K, rr.V);
            const std::vector<double> x = normalized(split.x);
            const std::vector<double> y = normalized(split.y);
            std::vector<double> next = eos::k_values(pkg, spec.T, spec.P, x, y);
            double change = 0.0;
            double spread = 0.0;
            for (std::size_t i = 0; i < K.size(); ++i) {
                change = std::max(change, std::abs(std::log(next[i]) - std::log(K[i])));
                spread = std::max(spread, std::abs(std::log(next[i])));
            }
            result.residual_trace.push_back({outer, rr.V, change});
            K = std::move(next);
            if (spread < 1e-8) {
                trivial = true;
                result.converged = true;
                break;
            }
            if (change < options.k_tolerance) {
                result.converged = true;
                break;
            }
        }
    }

    RachfordRiceSolution final_rr;
    if (trivial) {
        final_rr.V = spec.T > pseudo_critical_temperature(pkg, z) ? 1.0 : 0.0;
        final_rr.state = final_rr.V > 0.5 ? PhaseState::vapor : PhaseState::liquid;
        final_rr.converged = true;
    } else {
        final_rr = solve_rachford_rice(z, K, options, spec.derivative);
        result.inner_iters += final_rr.iterations;
        result.converged = result.converged && final_rr.converged;
    }
    result.newton_iters = result.inner_iters;
    result.V = final_rr.V;
    result.phase_state = final_rr.state;
    PhaseCompositions<double> split = reported_split(z, K, final_rr, options.negative_flash);
    result.x = std::move(split.x);
    result.y = std::move(split.y);
    result.K = std::move(K);
    return result;
}

// --- PV --------------------------------------------------------------------

PhaseCompositions<double> pv_initial_compositions(const PropertyPackage& pkg, std::span<const double> z, double T,
                                                  double P, double V)
{
    const std::vector<double> K = wilson_k(pkg, T, P);
    PhaseCompositions<double> split = phase_split<double>(z, K, V);
    return {normalized(std::move(split.x)), normalized(std::move(split.y))};
}

double pv_residual(const PropertyPackage& pkg, std::span<const double> z, double T, double P, double V,
                   std::span<const double> x, std::span<const double> y)
{
    const std::vector<double> K = eos::k_values(pkg, T, P, x, y);
    return rachford_rice_residual<double>(z, K, V);
}

double pv_residual_slope(const PropertyPackage& pkg, std::span<const double> z, double T, double P, double V,
                         std::span<const double> x, std::span<const double> y, DerivativeMode mode)
{
    if (!mode.is_ad()) {
        return findiff::fd_derivative([&](double t) { return pv_residual(pkg, z, t, P, V, x, y); }, T,
                                      findiff::FdScheme::central(mode.step));
    }
    const std::vector<Dual> xd = eos::lift<Dual>(x);
    const std::vector<Dual> yd = eos::lift<Dual>(y);
    const std::vector<Dual> K = eos::k_values<Dual>(pkg, Dual::variable(T, 0, 1), Dual(P), xd, yd);
    return rachford_rice_residual<Dual>(z, K, Dual(V)).tangent(0);
}

namespace {

struct Bracket {
    double lo;
    double hi;
    double lo_sign;
};

// Sign-change brackets for f on [t_min, t_max], nearest to `near` first:
// the endpoints if they differ in sign, otherwise the cells of a 25-cell
// scan. F(T) at fixed compositions can jump where a cubic changes root
// count, so callers try later brackets when Newton lands on such a jump.
template <class F>
std::vector<Bracket> find_brackets(F&& f, double t_min, double t_max, double near, const char* what)
{
    const double f_lo = f(t_min);
    const double f_hi = f(t_max);
    std::vector<Bracket> found;
    constexpr int cells = 25;
    double prev_t = t_min;
    double prev_f = f_lo;
    for (int i = 1; i <= cells; ++i) {
        const double t = t_min + (t_max - t_min) * i / cells;
        const double ft = i == cells ? f_hi : f(t);
        if ((prev_f > 0.0) != (ft > 0.0)) {
            found.push_back({prev_t, t, prev_f > 0.0 ? 1.0 : -1.0});
        }
        prev_t = t;
        prev_f = ft;
    }
    if (found.empty()) {
        std::ostringstream os;
        os << what << ": no sign change of the residual in [" << t_min << ", " << t_max << "] K";
        throw NoSolution(os.str());
    }
    const auto distance = [near](const Bracket& b) {
        return near < b.lo ? b.lo - near : (near > b.hi ? near - b.hi : 0.0);
    };
    std::stable_sort(found.begin(), found.end(),
                     [&](const Bracket& l, const Bracket& r) { return distance(l) < distance(r); });
    return found;
}

// Temperature at which Wilson K values put the feed at vapor fraction V,
// by bisection; the bracket midpoint if Wilson gives no sign change.
double wilson_pv_temperature(const PropertyPackage& pkg, std::span<const double> z, double P, double V,
                             const FlashOptions& options)
{
    const auto f = [&](double t) {
        const std::vector<double> K = wilson_k(pkg, t, P);
        double F = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            F += z[i] * (K[i] - 1.0) / ((K[i] - 1.0) * V + 1.0);
        }
        return F;
    };
    double lo = options.t_min;
    double hi = options.t_max;
    const bool lo_positive = f(lo) > 0.0;
    if (lo_positive == (f(hi) > 0.0)) {
        return 0.5 * (lo + hi);
    }
    for (int i = 0; i < 100 && hi - lo > 1e-10; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((f(mid) > 0.0) == lo_positive ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

FlashResult flash_pv(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options)
{
    if (spec.kind != FlashKind::pv) {
        throw std::invalid_argument("flash_pv: spec is not a PV flash");
    }
    spec.validate(pkg.size());
    const std::span<const double> z(spec.feed);
    const double V = spec.vapor_fraction;
    const double P = spec.P;

    FlashResult result;
    result.kind = FlashKind::pv;
    result.P = P;
    result.V = V;

    double T = options.initial_temperature.value_or(0.5 * (options.t_min + options.t_max));
    PhaseCompositions<double> phases = pv_initial_compositions(pkg, z, T, P, V);
    std::vector<double> K;
    bool inner_converged = false;
    bool reseeded = false;

    for (int outer = 1; outer <= options.max_outer; ++outer) {
        result.outer_iters = outer;
        const auto residual = [&](double t) { return pv_residual(pkg, z, t, P, V, phases.x, phases.y); };
        const auto eval = [&](double t) {
            return std::pair{residual(t), pv_residual_slope(pkg, z, t, P, V, phases.x, phases.y, spec.derivative)};
        };
        const double start = T;
        int pass_iterations = 0;
        for (const Bracket& bracket : find_brackets(residual, options.t_min, options.t_max, start, "PV flash")) {
            const int base = result.inner_iters;
            const NewtonOutcome newton = safeguarded_newton(
                eval, bracket.lo, bracket.hi, bracket.lo_sign, start, options.pv_tolerance,
                options.max_inner - pass_iterations, options.min_derivative,
                [&](int it, double t, double f) { result.residual_trace.push_back({base + it, t, std::abs(f)}); });
            result.inner_iters += newton.iterations;
            pass_iterations += newton.iterations;
            T = newton.root;
            inner_converged = newton.converged;
            if (inner_converged || pass_iterations >= options.max_inner) {
                break;
            }
        }
        if (!inner_converged) {
            if (reseeded) {
                break;
            }
            // A pass can land on a spurious root whose compositions leave
            // only jump brackets; restart once from the Wilson-model solution.
            reseeded = true;
            T = wilson_pv_temperature(pkg, z, P, V, options);
            phases = pv_initial_compositions(pkg, z, T, P, V);
            continue;
        }

        K = eos::k_values(pkg, T, P, phases.x, phases.y);
        PhaseCompositions<double> split = phase_split<double>(z, K, V);
        PhaseCompositions<double> next{normalized(std::move(split.x)), normalized(std::move(split.y))};
        const double change = std::max(max_abs_diff(next.x, phases.x), max_abs_diff(next.y, phases.y));
        phases = std::move(next);
        if (change < options.composition_tolerance) {
            result.converged = true;
            break;
        }
    }

    result.T = T;
    result.newton_iters = result.inner_iters;
    if (K.empty()) {
        K = eos::k_values(pkg, T, P, phases.x, phases.y);
    }
    PhaseCompositions<double> split = phase_split<double>(z, K, V);
    result.x = std::move(split.x);
    result.y = std::move(split.y);
    result.K = std::move(K);
    result.phase_state = V <= 0.0 ? PhaseState::liquid : (V >= 1.0 ? PhaseState::vapor : PhaseState::two_phase);
    return result;
}

// --- PH --------------------------------------------------------------------

namespace {

FlashResult pt_at(const PropertyPackage& pkg, std::span<const double> z, double T, double P,
                  const FlashOptions& options)
{
    FlashOptions pt_options = options;
    pt_options.initial_k.reset();
    pt_options.update_k = true;
    pt_options.negative_flash = false;
    FlashResult pt = flash_pt(pkg, FlashSpec::pt({z.begin(), z.end()}, P, T), pt_options);
    if (!pt.converged) {
        std::ostringstream os;
        os << "PT flash at T = " << T << " K did not converge in " << pt.outer_iters << " iterations";
        throw FlashError(os.str());
    }
    return pt;
}

template <class S>
S mixture_outlet_enthalpy(const PropertyPackage& pkg, std::span<const double> z, const S& T, double P,
                          const FlashResult& pt, std::span<const S> K, double V)
{
    const S p(P);
    if (pt.phase_state != PhaseState::two_phase) {
        const std::vector<S> feed = eos::lift<S>(z);
        const Phase phase = pt.phase_state == PhaseState::liquid ? Phase::liquid : Phase::vapor;
        return eos::phase_enthalpy<S>(pkg, T, p, feed, phase);
    }
    const S v = implicit_vapor_fraction<S>(z, K, V);
    const PhaseCompositions<S> split = phase_split<S>(z, K, v);
    return (1.0 - v) * eos::phase_enthalpy<S>(pkg, T, p, split.x, Phase::liquid)
           + v * eos::phase_enthalpy<S>(pkg, T, p, split.y, Phase::vapor);
}

} // namespace

double outlet_enthalpy(const PropertyPackage& pkg, std::span<const double> z, double T, double P,
                       const FlashOptions& options)
{
    const FlashResult pt = pt_at(pkg, z, T, P, options);
    return mixture_outlet_enthalpy<double>(pkg, z, T, P, pt, pt.K, pt.V);
}

EnthalpySlope outlet_enthalpy_with_slope(const PropertyPackage& pkg, std::span<const double> z, double T, double P,
                                         const FlashOptions& options)
{
    EnthalpySlope out;
    out.pt = pt_at(pkg, z, T, P, options);
    const std::size_t n = pkg.size();
    std::vector<double> dK_dT(n, 0.0);

    if (out.pt.phase_state == PhaseState::two_phase) {
        if (n + 1 > ad::kMaxDirections) {
            throw FlashError("PH slope: too many components for the tangent width");
        }
        // Jacobian of K -> Phi(T, K) at the fixed point, directions (T, K_1..K_n).
        const std::size_t width = n + 1;
        std::vector<Dual> K(n);
        for (std::size_t j = 0; j < n; ++j) {
            K[j] = Dual::variable(out.pt.K[j], j + 1, width);
        }
        const Dual t = Dual::variable(T, 0, width);
        const Dual v = implicit_vapor_fraction<Dual>(z, K, out.pt.V);
        const PhaseCompositions<Dual> split = phase_split<Dual>(z, K, v);
        const std::vector<Dual> phi = eos::k_values<Dual>(pkg, t, Dual(P), split.x, split.y);

        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            rhs(i) = phi[i].tangent(0);
            for (std::size_t j = 0; j < n; ++j) {
                system(i, j) -= phi[i].tangent(j + 1);
            }
        }
        const Eigen::VectorXd solution = system.partialPivLu().solve(rhs);
        for (std::size_t i = 0; i < n; ++i) {
            dK_dT[i] = solution(i);
        }
    }

    std::vector<Dual> K(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double tangent[] = {dK_dT[j]};
        K[j] = Dual(out.pt.K[j], tangent);
    }
    const Dual H = mixture_outlet_enthalpy<Dual>(pkg, z, Dual::variable(T, 0, 1), P, out.pt, K, out.pt.V);
    out.enthalpy = H.value();
    out.slope = H.tangent(0);
    return out;
}

double feed_enthalpy(const PropertyPackage& pkg, std::span<const double> z, double T, double P)
{
    return outlet_enthalpy(pkg, z, T, P);
}

FlashResult flash_ph(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options)
{
    if (spec.kind != FlashKind::ph) {
        throw std::invalid_argument("flash_ph: spec is not a PH flash");
    }
    spec.validate(pkg.size());
    const std::span<const double> z(spec.feed);
    const double P = spec.P;
    const double H_total = spec.total_enthalpy();
    const double scale = std::max(1.0, std::abs(H_total));

    const auto error_at = [&](double t) {
        try {
            return H_total - outlet_enthalpy(pkg, z, t, P, options);
        } catch (const FlashError&) {
            throw;
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "PH flash: inner PT flash failed at T = " << t << " K: " << e.what();
            throw FlashError(os.str());
        }
    };

    FlashResult result;
    result.kind = FlashKind::ph;
    result.P = P;
    result.total_enthalpy = H_total;

    const double T0 = options.initial_temperature.value_or(0.5 * (options.t_min + options.t_max));
    const Bracket bracket = find_brackets(error_at, options.t_min, options.t_max, T0, "PH flash").front();

    int pt_iterations = 0;
    const auto eval = [&](double t) -> std::pair<double, double> {
        if (spec.derivative.is_ad()) {
            EnthalpySlope hs;
            try {
                hs = outlet_enthalpy_with_slope(pkg, z, t, P, options);
            } catch (const FlashError&) {
                throw;
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "PH flash: inner evaluation failed at T = " << t << " K: " << e.what();
                throw FlashError(os.str());
            }
            pt_iterations += hs.pt.outer_iters;
            return {H_total - hs.enthalpy, -hs.slope};
        }
        const double e = error_at(t);
        const double de = findiff::fd_derivative(error_at, t, findiff::FdScheme::central(spec.derivative.step));
        return {e, de};
    };

    const NewtonOutcome newton = safeguarded_newton(
        eval, bracket.lo, bracket.hi, bracket.lo_sign, T0, options.ph_relative_tolerance * scale, options.max_outer,
        options.min_derivative,
        [&](int it, double t, double e) { result.residual_trace.push_back({it, t, std::abs(e) / scale}); });

    result.T = newton.root;
    result.outer_iters = result.newton_iters = newton.iterations;
    result.converged = newton.converged;

    const FlashResult pt = pt_at(pkg, z, result.T, P, options);
    result.inner_iters = pt_iterations + pt.outer_iters;
    result.V = pt.V;
    result.x = pt.x;
    result.y = pt.y;
    result.K = pt.K;
    result.phase_state = pt.phase_state;
    result.outlet_enthalpy = mixture_outlet_enthalpy<double>(pkg, z, result.T, P, pt, pt.K, pt.V);
    return result;
}

FlashResult run_flash(const PropertyPackage& pkg, const FlashSpec& spec, const FlashOptions& options)
{
    switch (spec.kind) {
    case FlashKind::pt:
        return flash_pt(pkg, spec, options);
    case FlashKind::pv:
        return flash_pv(pkg, spec, options);
    case FlashKind::ph:
        return flash_ph(pkg, spec, options);
    }
    throw std::invalid_argument("unknown flash kind");
}

} // namespace difftherm::flash
