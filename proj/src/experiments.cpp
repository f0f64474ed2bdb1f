#include "difftherm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "difftherm/eos_srk.hpp"
#include "difftherm/findiff.hpp"

namespace difftherm::experiments {

using flash::DerivativeMode;
using flash::FlashKind;
using json = nlohmann::ordered_json;

const char* to_string(ScenarioKind k) noexcept
{
    switch (k) {
    case ScenarioKind::dk_curves:
        return "dk-curves";
    case ScenarioKind::step_sweep:
        return "step-sweep";
    case ScenarioKind::distribution:
        return "distribution";
    case ScenarioKind::iterations:
        return "iterations";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s)
{
    for (ScenarioKind k :
         {ScenarioKind::dk_curves, ScenarioKind::step_sweep, ScenarioKind::distribution, ScenarioKind::iterations}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw ValidationError("unknown scenario kind '" + s
                          + "' (expected dk-curves, step-sweep, distribution or iterations)");
}

std::vector<double> linspace(double from, double to, std::size_t points)
{
    if (points == 0) {
        throw ValidationError("linspace: at least one point required");
    }
    if (points == 1) {
        return {from};
    }
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    out.back() = to;
    return out;
}

Scenario default_scenario(ScenarioKind kind, std::string id)
{
    Scenario s;
    s.kind = kind;
    s.id = id.empty() ? to_string(kind) : std::move(id);
    switch (kind) {
    case ScenarioKind::dk_curves:
        s.temperatures = linspace(200.0, 300.0, 101);
        s.pressures = linspace(10e5, 19e5, 101);
        break;
    case ScenarioKind::step_sweep:
        break;
    case ScenarioKind::distribution:
        s.samples = 500;
        break;
    case ScenarioKind::iterations:
        s.samples = 20;
        s.fd_steps = {1e-1, 1e-3, 1e-6, 1e-8};
        break;
    }
    return s;
}

void Scenario::validate(std::size_t components) const
{
    const auto fail = [this](const std::string& why) {
        throw ValidationError("scenario '" + id + "': " + why);
    };
    if (id.empty()) {
        throw ValidationError("scenario without an id");
    }
    if (kind != ScenarioKind::distribution && kind != ScenarioKind::iterations) {
        eos::MixtureState{temperature, pressure, feed}.validate(components);
    }
    const auto positive_steps = [&fail](const std::vector<double>& steps, const char* what) {
        for (double h : steps) {
            if (!(h > 0.0) || !std::isfinite(h)) {
                fail(std::string(what) + " must be positive and finite");
            }
        }
    };
    switch (kind) {
    case ScenarioKind::dk_curves:
        if (temperatures.empty() && pressures.empty()) {
            fail("dk-curves needs a temperature or pressure grid");
        }
        positive_steps(fd_steps_temperature, "fd-steps-k");
        positive_steps(fd_steps_pressure, "fd-steps-pa");
        break;
    case ScenarioKind::step_sweep:
        positive_steps(sweep_steps_temperature, "sweep-steps-k");
        positive_steps(sweep_steps_pressure, "sweep-steps-pa");
        break;
    case ScenarioKind::distribution:
    case ScenarioKind::iterations:
        if (samples == 0) {
            fail("samples must be positive");
        }
        positive_steps(fd_steps, "fd-steps-k");
        if (kind == ScenarioKind::distribution && !(vapor_fraction >= 0.0 && vapor_fraction <= 1.0)) {
            fail("vapor-fraction must lie in [0, 1]");
        }
        if (kind == ScenarioKind::iterations) {
            if (vapor_fractions.empty() || flashes.empty()) {
                fail("iterations needs vapor fractions and flash kinds");
            }
            for (double v : vapor_fractions) {
                if (!(v >= 0.0 && v <= 1.0)) {
                    fail("vapor fractions must lie in [0, 1]");
                }
            }
        }
        if (!(pressure > 0.0)) {
            fail("pressure must be positive");
        }
        break;
    }
    for (double t : temperatures) {
        if (!(t > 0.0)) {
            fail("temperatures must be positive");
        }
    }
    for (double p : pressures) {
        if (!(p > 0.0)) {
            fail("pressures must be positive");
        }
    }
}

// --- statistics ------------------------------------------------------------

Moments moments(std::span<const double> values)
{
    Moments m;
    m.count = values.size();
    if (values.empty()) {
        return m;
    }
    m.min = *std::min_element(values.begin(), values.end());
    m.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    m.mean = sum / static_cast<double>(m.count);
    if (m.count > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - m.mean) * (v - m.mean);
        }
        m.variance = ss / static_cast<double>(m.count - 1);
    }
    return m;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::optional<double> smoothness_metric(std::span<const double> curve)
{
    if (curve.size() < 3) {
        return std::nullopt;
    }
    std::vector<double> jumps(curve.size() - 1);
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        jumps[i] = std::abs(curve[i + 1] - curve[i]);
    }
    const double largest = *std::max_element(jumps.begin(), jumps.end());
    const double typical = median(jumps);
    if (typical == 0.0) {
        return largest == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return largest / typical;
}

TukeyFence tukey_fence(std::span<const double> values, double k)
{
    std::vector<double> v(values.begin(), values.end());
    TukeyFence f;
    f.q1 = quantile(v, 0.25);
    f.q3 = quantile(v, 0.75);
    const double iqr = f.q3 - f.q1;
    f.lower = f.q1 - k * iqr;
    f.upper = f.q3 + k * iqr;
    return f;
}

std::size_t count_outliers(std::span<const double> values, const TukeyFence& fence)
{
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [&](double v) { return v < fence.lower || v > fence.upper; }));
}

std::vector<std::vector<double>> sample_compositions(std::size_t components, std::size_t count, std::uint64_t seed)
{
    if (components == 0) {
        throw std::invalid_argument("sample_compositions: no components");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> out(count, std::vector<double>(components));
    for (auto& z : out) {
        double total = 0.0;
        for (double& e : z) {
            // 53 random bits -> u in [0, 1); -log1p(-u) is a unit exponential.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            e = -std::log1p(-u);
            total += e;
        }
        if (total == 0.0) {
            std::fill(z.begin(), z.end(), 1.0 / static_cast<double>(components));
            continue;
        }
        for (double& e : z) {
            e /= total;
        }
    }
    return out;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

// --- runners ---------------------------------------------------------------

namespace {

std::vector<std::string> species_names(const PropertyPackage& pkg)
{
    std::vector<std::string> out;
    for (const Component& c : pkg.components) {
        out.push_back(c.name);
    }
    return out;
}

std::string describe(const std::exception& e)
{
    std::string s = e.what();
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

// Per-point derivative of every K_i for one curve variable, for AD and each
// FD step. Slot 0 is AD; slot 1 + s is FD step s.
struct PointDerivatives {
    std::vector<std::vector<std::optional<double>>> by_mode; // [mode][species]
    std::vector<std::string> status;                         // per mode
};

PointDerivatives k_point_derivatives(const PropertyPackage& pkg, std::span<const double> feed, double T, double P,
                                     bool temperature, std::span<const double> steps)
{
    const std::size_t n = pkg.size();
    PointDerivatives out;
    out.by_mode.assign(1 + steps.size(), std::vector<std::optional<double>>(n));
    out.status.assign(1 + steps.size(), "ok");

    flash::PhaseCompositions<double> phases;
    try {
        phases = curve_compositions(pkg, feed, T, P);
    } catch (const std::exception& e) {
        std::fill(out.status.begin(), out.status.end(), "error: " + describe(e));
        return out;
    }

    try {
        const auto dK = eos::k_derivatives(pkg, T, P, phases.x, phases.y,
                                           temperature ? eos::Wrt::temperature() : eos::Wrt::pressure());
        for (std::size_t i = 0; i < n; ++i) {
            out.by_mode[0][i] = dK[i];
        }
    } catch (const std::exception& e) {
        out.status[0] = "error: " + describe(e);
    }

    for (std::size_t s = 0; s < steps.size(); ++s) {
        const double h = steps[s];
        try {
            const auto plus = temperature ? eos::k_values(pkg, T + h, P, phases.x, phases.y)
                                          : eos::k_values(pkg, T, P + h, phases.x, phases.y);
            const auto minus = temperature ? eos::k_values(pkg, T - h, P, phases.x, phases.y)
                                           : eos::k_values(pkg, T, P - h, phases.x, phases.y);
            for (std::size_t i = 0; i < n; ++i) {
                out.by_mode[1 + s][i] = (plus[i] - minus[i]) / (2.0 * h);
            }
        } catch (const std::exception& e) {
            out.status[1 + s] = "error: " + describe(e);
        }
    }
    return out;
}

void append_curve(RunReport& report, const PropertyPackage& pkg, std::span<const double> feed, const std::string& variable,
                  std::span<const double> grid, double fixed, std::span<const double> steps, unsigned threads)
{
    const bool temperature = variable == "T";
    std::vector<PointDerivatives> points(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        const double T = temperature ? grid[k] : fixed;
        const double P = temperature ? fixed : grid[k];
        points[k] = k_point_derivatives(pkg, feed, T, P, temperature, steps);
    });

    for (std::size_t i = 0; i < pkg.size(); ++i) {
        for (std::size_t m = 0; m <= steps.size(); ++m) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                CurveRecord r;
                r.variable = variable;
                r.species = i;
                r.mode = m == 0 ? "ad" : "fd";
                if (m > 0) {
                    r.step = steps[m - 1];
                }
                r.index = k;
                r.temperature = temperature ? grid[k] : fixed;
                r.pressure = temperature ? fixed : grid[k];
                r.derivative = points[k].by_mode[m][i];
                r.status = points[k].status[m];
                report.curve.push_back(std::move(r));
            }
        }
    }
}

} // namespace

flash::PhaseCompositions<double> curve_compositions(const PropertyPackage& pkg, std::span<const double> feed,
                                                    double T, double P)
{
    flash::FlashOptions options;
    options.negative_flash = true;
    const flash::FlashResult r = flash::flash_pt(pkg, flash::FlashSpec::pt({feed.begin(), feed.end()}, P, T), options);
    if (!r.converged) {
        throw flash::FlashError("negative flash did not converge");
    }
    return {r.x, r.y};
}

RunReport run_dk_curves(const PropertyPackage& pkg, const Scenario& scenario)
{
    scenario.validate(pkg.size());
    RunReport report;
    report.scenario_id = scenario.id;
    report.kind = ScenarioKind::dk_curves;
    report.species = species_names(pkg);
    append_curve(report, pkg, scenario.feed, "T", scenario.temperatures, scenario.pressure,
                 scenario.fd_steps_temperature, scenario.threads);
    append_curve(report, pkg, scenario.feed, "P", scenario.pressures, scenario.temperature,
                 scenario.fd_steps_pressure, scenario.threads);
    report.summary = summarize(report);
    return report;
}

RunReport run_step_sweep(const PropertyPackage& pkg, const Scenario& scenario)
{
    scenario.validate(pkg.size());
    RunReport report;
    report.scenario_id = scenario.id;
    report.kind = ScenarioKind::step_sweep;
    report.species = species_names(pkg);

    const double T = scenario.temperature;
    const double P = scenario.pressure;
    const flash::PhaseCompositions<double> phases = curve_compositions(pkg, scenario.feed, T, P);

    for (const bool temperature : {true, false}) {
        const auto wrt = temperature ? eos::Wrt::temperature() : eos::Wrt::pressure();
        const std::vector<double> reference = eos::k_derivatives(pkg, T, P, phases.x, phases.y, wrt);
        const std::vector<double>& steps =
            temperature ? scenario.sweep_steps_temperature : scenario.sweep_steps_pressure;
        for (std::size_t i = 0; i < pkg.size(); ++i) {
            const auto f = [&](double v) {
                return temperature ? eos::k_values(pkg, v, P, phases.x, phases.y)[i]
                                   : eos::k_values(pkg, T, v, phases.x, phases.y)[i];
            };
            const auto rows = findiff::step_sweep(f, temperature ? T : P, steps, reference[i]);
            for (const findiff::SweepRow& row : rows) {
                SweepRecord r;
                r.variable = temperature ? "T" : "P";
                r.species = i;
                r.temperature = T;
                r.pressure = P;
                r.step = row.step;
                r.reference = reference[i];
                r.derivative = row.derivative;
                r.deviation = row.deviation;
                r.status = row.ok() ? "ok" : "error: " + row.error;
                report.sweep.push_back(std::move(r));
            }
        }
    }
    report.summary = summarize(report);
    return report;
}

RunReport run_distribution_study(const PropertyPackage& pkg, const Scenario& scenario)
{
    scenario.validate(pkg.size());
    RunReport report;
    report.scenario_id = scenario.id;
    report.kind = ScenarioKind::distribution;
    report.species = species_names(pkg);

    const auto feeds = sample_compositions(pkg.size(), scenario.samples, scenario.seed);
    const double T = scenario.options.initial_temperature.value_or(0.5
                                                                   * (scenario.options.t_min + scenario.options.t_max));
    const double P = scenario.pressure;
    const double V = scenario.vapor_fraction;
    std::vector<DerivativeMode> modes{DerivativeMode::automatic()};
    for (double h : scenario.fd_steps) {
        modes.push_back(DerivativeMode::finite_difference(h));
    }

    std::vector<std::vector<DistributionRecord>> cells(feeds.size());
    parallel_for(feeds.size(), scenario.threads, [&](std::size_t s) {
        for (const DerivativeMode& mode : modes) {
            DistributionRecord r;
            r.sample = s;
            r.feed = feeds[s];
            r.mode = mode.is_ad() ? "ad" : "fd";
            if (!mode.is_ad()) {
                r.step = mode.step;
            }
            r.temperature = T;
            try {
                const auto phases = flash::pv_initial_compositions(pkg, feeds[s], T, P, V);
                r.derivative = flash::pv_residual_slope(pkg, feeds[s], T, P, V, phases.x, phases.y, mode);
            } catch (const std::exception& e) {
                r.status = "error: " + describe(e);
            }
            cells[s].push_back(std::move(r));
        }
    });
    for (auto& cell : cells) {
        for (auto& r : cell) {
            report.distribution.push_back(std::move(r));
        }
    }
    report.summary = summarize(report);
    return report;
}

RunReport run_iteration_benchmark(const PropertyPackage& pkg, const Scenario& scenario)
{
    scenario.validate(pkg.size());
    RunReport report;
    report.scenario_id = scenario.id;
    report.kind = ScenarioKind::iterations;
    report.species = species_names(pkg);

    const auto feeds = sample_compositions(pkg.size(), scenario.samples, scenario.seed);
    const double P = scenario.pressure;
    std::vector<DerivativeMode> modes{DerivativeMode::automatic()};
    for (double h : scenario.fd_steps) {
        modes.push_back(DerivativeMode::finite_difference(h));
    }
    const bool want_pv = std::find(scenario.flashes.begin(), scenario.flashes.end(), FlashKind::pv)
                         != scenario.flashes.end();
    const bool want_ph = std::find(scenario.flashes.begin(), scenario.flashes.end(), FlashKind::ph)
                         != scenario.flashes.end();

    const std::size_t cells = feeds.size() * scenario.vapor_fractions.size();
    std::vector<std::vector<IterationRecord>> results(cells);
    parallel_for(cells, scenario.threads, [&](std::size_t c) {
        const std::size_t s = c / scenario.vapor_fractions.size();
        const double V = scenario.vapor_fractions[c % scenario.vapor_fractions.size()];
        const auto record = [&](FlashKind kind, const DerivativeMode& mode) {
            IterationRecord r;
            r.sample = s;
            r.vapor_fraction = V;
            r.flash = kind;
            r.mode = mode.is_ad() ? "ad" : "fd";
            if (!mode.is_ad()) {
                r.step = mode.step;
            }
            return r;
        };
        const auto fill = [](IterationRecord& r, const flash::FlashResult& res) {
            r.converged = res.converged;
            r.newton_iters = res.newton_iters;
            r.outer_iters = res.outer_iters;
            r.inner_iters = res.inner_iters;
            r.temperature = res.T;
            r.status = res.converged ? "ok" : "not-converged";
        };

        // The PH target is the outlet enthalpy at the AD PV temperature, so
        // both flashes aim at the same physical state.
        std::optional<double> ph_target;
        std::string target_error;
        for (const DerivativeMode& mode : modes) {
            IterationRecord r = record(FlashKind::pv, mode);
            try {
                const auto res =
                    flash::flash_pv(pkg, flash::FlashSpec::pv(feeds[s], P, V, mode), scenario.options);
                fill(r, res);
                if (mode.is_ad() && res.converged && want_ph) {
                    ph_target = flash::outlet_enthalpy(pkg, feeds[s], res.T, P, scenario.options);
                }
            } catch (const std::exception& e) {
                r.status = "error: " + describe(e);
                if (mode.is_ad()) {
                    target_error = r.status;
                }
            }
            if (want_pv) {
                results[c].push_back(std::move(r));
            }
        }
        if (!want_ph) {
            return;
        }
        for (const DerivativeMode& mode : modes) {
            IterationRecord r = record(FlashKind::ph, mode);
            if (!ph_target) {
                r.status = "no-target";
                results[c].push_back(std::move(r));
                continue;
            }
            try {
                const auto res =
                    flash::flash_ph(pkg, flash::FlashSpec::ph(feeds[s], P, *ph_target, 0.0, mode), scenario.options);
                fill(r, res);
            } catch (const std::exception& e) {
                r.status = "error: " + describe(e);
            }
            results[c].push_back(std::move(r));
        }
    });
    for (auto& cell : results) {
        for (auto& r : cell) {
            report.iterations.push_back(std::move(r));
        }
    }
    report.summary = summarize(report);
    return report;
}

RunReport run_scenario(const PropertyPackage& pkg, const Scenario& scenario)
{
    switch (scenario.kind) {
    case ScenarioKind::dk_curves:
        return run_dk_curves(pkg, scenario);
    case ScenarioKind::step_sweep:
        return run_step_sweep(pkg, scenario);
    case ScenarioKind::distribution:
        return run_distribution_study(pkg, scenario);
    case ScenarioKind::iterations:
        return run_iteration_benchmark(pkg, scenario);
    }
    throw std::invalid_argument("unknown scenario kind");
}

// --- summaries -------------------------------------------------------------

namespace {

json number_or_null(std::optional<double> v)
{
    if (!v) {
        return nullptr;
    }
    if (!std::isfinite(*v)) {
        return std::isnan(*v) ? "nan" : (*v > 0 ? "inf" : "-inf");
    }
    return *v;
}

json moments_json(const Moments& m)
{
    json j;
    j["count"] = m.count;
    j["mean"] = m.count ? json(m.mean) : json(nullptr);
    j["variance"] = m.count ? json(m.variance) : json(nullptr);
    j["min"] = m.count ? json(m.min) : json(nullptr);
    j["max"] = m.count ? json(m.max) : json(nullptr);
    return j;
}

json summarize_curves(const RunReport& report)
{
    // Records of one curve are contiguous and in grid order.
    json out = json::array();
    std::size_t begin = 0;
    while (begin < report.curve.size()) {
        const CurveRecord& head = report.curve[begin];
        std::size_t end = begin;
        std::vector<double> values;
        std::size_t failures = 0;
        bool gap = false;
        while (end < report.curve.size() && report.curve[end].variable == head.variable
               && report.curve[end].species == head.species && report.curve[end].mode == head.mode
               && report.curve[end].step == head.step) {
            if (report.curve[end].derivative) {
                values.push_back(*report.curve[end].derivative);
            } else {
                ++failures;
                gap = true;
            }
            ++end;
        }
        json j;
        j["variable"] = head.variable;
        j["species"] = report.species.at(head.species);
        j["mode"] = head.mode;
        j["step"] = number_or_null(head.step);
        j["points"] = end - begin;
        j["failures"] = failures;
        // A curve with holes has no meaningful adjacent-jump statistic.
        j["smoothness"] = gap ? json(nullptr) : number_or_null(smoothness_metric(values));
        j["stats"] = moments_json(moments(values));
        out.push_back(std::move(j));
        begin = end;
    }
    return out;
}

json summarize_sweep(const RunReport& report)
{
    json out = json::array();
    std::size_t begin = 0;
    while (begin < report.sweep.size()) {
        const SweepRecord& head = report.sweep[begin];
        std::size_t end = begin;
        while (end < report.sweep.size() && report.sweep[end].variable == head.variable
               && report.sweep[end].species == head.species) {
            ++end;
        }
        json j;
        j["variable"] = head.variable;
        j["species"] = report.species.at(head.species);
        j["reference"] = head.reference;
        std::optional<std::size_t> best;
        bool increases = false;
        bool decreases = false;
        std::optional<double> previous;
        for (std::size_t k = begin; k < end; ++k) {
            const auto& d = report.sweep[k].deviation;
            if (!d) {
                continue;
            }
            if (!best || *d < *report.sweep[*best].deviation) {
                best = k;
            }
            if (previous) {
                increases = increases || *d > *previous;
                decreases = decreases || *d < *previous;
            }
            previous = d;
        }
        j["rows"] = end - begin;
        if (best) {
            j["best_step"] = report.sweep[*best].step;
            j["min_deviation"] = *report.sweep[*best].deviation;
            j["interior_minimum"] = *best != begin && *best != end - 1;
        } else {
            j["best_step"] = nullptr;
            j["min_deviation"] = nullptr;
            j["interior_minimum"] = false;
        }
        j["non_monotone"] = increases && decreases;
        const SweepRecord& last = report.sweep[end - 1];
        j["smallest_step"] = last.step;
        j["smallest_step_deviation"] = number_or_null(last.deviation);
        j["smallest_to_min_ratio"] = (best && last.deviation && *report.sweep[*best].deviation > 0.0)
                                         ? json(*last.deviation / *report.sweep[*best].deviation)
                                         : json(nullptr);
        out.push_back(std::move(j));
        begin = end;
    }
    return out;
}

json summarize_distribution(const RunReport& report)
{
    std::vector<std::pair<std::string, std::optional<double>>> keys;
    for (const DistributionRecord& r : report.distribution) {
        const std::pair key{r.mode, r.step};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            keys.push_back(key);
        }
    }
    json out = json::array();
    for (const auto& [mode, step] : keys) {
        std::vector<double> finite;
        std::size_t non_finite = 0;
        std::size_t failures = 0;
        std::size_t total = 0;
        for (const DistributionRecord& r : report.distribution) {
            if (r.mode != mode || r.step != step) {
                continue;
            }
            ++total;
            if (!r.derivative) {
                ++failures;
            } else if (!std::isfinite(*r.derivative)) {
                ++non_finite;
            } else {
                finite.push_back(*r.derivative);
            }
        }
        json j;
        j["mode"] = mode;
        j["step"] = number_or_null(step);
        j["samples"] = total;
        j["failures"] = failures;
        j["non_finite"] = non_finite;
        j["stats"] = moments_json(moments(finite));
        if (!finite.empty()) {
            const TukeyFence fence = tukey_fence(finite);
            j["q1"] = fence.q1;
            j["q3"] = fence.q3;
            j["fence_lower"] = fence.lower;
            j["fence_upper"] = fence.upper;
            j["outliers"] = count_outliers(finite, fence);
        } else {
            j["q1"] = j["q3"] = j["fence_lower"] = j["fence_upper"] = nullptr;
            j["outliers"] = 0;
        }
        out.push_back(std::move(j));
    }
    return out;
}

json summarize_iterations(const RunReport& report)
{
    json out = json::array();
    for (const FlashKind kind : {FlashKind::pv, FlashKind::ph}) {
        std::vector<std::pair<std::string, std::optional<double>>> keys;
        for (const IterationRecord& r : report.iterations) {
            const std::pair key{r.mode, r.step};
            if (r.flash == kind && std::find(keys.begin(), keys.end(), key) == keys.end()) {
                keys.push_back(key);
            }
        }
        // AD result per (sample, V) cell for the pairwise comparison.
        std::map<std::pair<std::size_t, double>, const IterationRecord*> ad_cells;
        for (const IterationRecord& r : report.iterations) {
            if (r.flash == kind && r.mode == "ad") {
                ad_cells[{r.sample, r.vapor_fraction}] = &r;
            }
        }
        for (const auto& [mode, step] : keys) {
            std::size_t cells = 0;
            std::size_t converged = 0;
            std::vector<double> iterations;
            std::size_t joint = 0;
            std::size_t ad_not_worse = 0;
            std::size_t fd_only = 0;
            for (const IterationRecord& r : report.iterations) {
                if (r.flash != kind || r.mode != mode || r.step != step || r.status == "no-target") {
                    continue;
                }
                ++cells;
                if (r.converged) {
                    ++converged;
                    iterations.push_back(r.newton_iters);
                }
                if (mode == "fd") {
                    const IterationRecord* ad = ad_cells.at({r.sample, r.vapor_fraction});
                    if (r.converged && ad->converged) {
                        ++joint;
                        ad_not_worse += ad->newton_iters <= r.newton_iters ? 1 : 0;
                    }
                    if (r.converged && !ad->converged) {
                        ++fd_only;
                    }
                }
            }
            json j;
            j["flash"] = flash::to_string(kind);
            j["mode"] = mode;
            j["step"] = number_or_null(step);
            j["cells"] = cells;
            j["converged"] = converged;
            j["success_rate"] = cells ? json(static_cast<double>(converged) / static_cast<double>(cells)) : json(nullptr);
            j["median_newton_iters"] = iterations.empty() ? json(nullptr) : json(median(iterations));
            j["mean_newton_iters"] = iterations.empty() ? json(nullptr) : json(moments(iterations).mean);
            if (mode == "fd") {
                j["jointly_converged"] = joint;
                j["ad_not_worse"] = ad_not_worse;
                j["ad_not_worse_fraction"] = joint ? json(static_cast<double>(ad_not_worse) / static_cast<double>(joint))
                                                   : json(nullptr);
                j["fd_only_converged"] = fd_only;
            }
            out.push_back(std::move(j));
        }
    }
    return out;
}

} // namespace

json summarize(const RunReport& report)
{
    json j;
    j["scenario"] = report.scenario_id;
    j["kind"] = to_string(report.kind);
    j["species"] = report.species;
    j["records"] = {{"curve", report.curve.size()},
                    {"sweep", report.sweep.size()},
                    {"distribution", report.distribution.size()},
                    {"iterations", report.iterations.size()}};
    switch (report.kind) {
    case ScenarioKind::dk_curves:
        j["curves"] = summarize_curves(report);
        break;
    case ScenarioKind::step_sweep:
        j["sweeps"] = summarize_sweep(report);
        break;
    case ScenarioKind::distribution:
        j["modes"] = summarize_distribution(report);
        break;
    case ScenarioKind::iterations:
        j["modes"] = summarize_iterations(report);
        break;
    }
    return j;
}

// --- output ----------------------------------------------------------------

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

namespace {

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

// Quotes a field when it holds a separator, quote or newline.
std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

template <class Row>
std::string join(const Row& fields)
{
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        line += (i ? "," : "") + csv_field(fields[i]);
    }
    return line + "\n";
}

} // namespace

std::string to_csv(const RunReport& report, const std::string& kind)
{
    std::string out;
    if (kind == "curve" && !report.curve.empty()) {
        out += join(std::vector<std::string>{"variable", "species", "mode", "step", "index", "temperature_k",
                                             "pressure_pa", "dk_dvar", "status"});
        for (const CurveRecord& r : report.curve) {
            out += join(std::vector<std::string>{r.variable, report.species.at(r.species), r.mode,
                                                 optional_number(r.step), std::to_string(r.index),
                                                 format_number(r.temperature), format_number(r.pressure),
                                                 optional_number(r.derivative), r.status});
        }
    } else if (kind == "sweep" && !report.sweep.empty()) {
        out += join(std::vector<std::string>{"variable", "species", "temperature_k", "pressure_pa", "step",
                                             "ad_reference", "fd_derivative", "deviation", "status"});
        for (const SweepRecord& r : report.sweep) {
            out += join(std::vector<std::string>{r.variable, report.species.at(r.species), format_number(r.temperature),
                                                 format_number(r.pressure), format_number(r.step),
                                                 format_number(r.reference), optional_number(r.derivative),
                                                 optional_number(r.deviation), r.status});
        }
    } else if (kind == "distribution" && !report.distribution.empty()) {
        std::vector<std::string> header{"sample"};
        for (const std::string& name : report.species) {
            header.push_back("z_" + name);
        }
        for (const char* c : {"mode", "step", "temperature_k", "df_dt", "status"}) {
            header.push_back(c);
        }
        out += join(header);
        for (const DistributionRecord& r : report.distribution) {
            std::vector<std::string> row{std::to_string(r.sample)};
            for (double z : r.feed) {
                row.push_back(format_number(z));
            }
            row.push_back(r.mode);
            row.push_back(optional_number(r.step));
            row.push_back(format_number(r.temperature));
            row.push_back(optional_number(r.derivative));
            row.push_back(r.status);
            out += join(row);
        }
    } else if (kind == "iterations" && !report.iterations.empty()) {
        out += join(std::vector<std::string>{"sample", "vapor_fraction", "flash", "mode", "step", "converged",
                                             "newton_iters", "outer_iters", "inner_iters", "temperature_k",
                                             "status"});
        for (const IterationRecord& r : report.iterations) {
            out += join(std::vector<std::string>{
                std::to_string(r.sample), format_number(r.vapor_fraction), flash::to_string(r.flash), r.mode,
                optional_number(r.step), r.converged ? "1" : "0", std::to_string(r.newton_iters),
                std::to_string(r.outer_iters), std::to_string(r.inner_iters), optional_number(r.temperature),
                r.status});
        }
    }
    return out;
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& directory)
{
    std::filesystem::create_directories(directory);
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    for (const char* kind : {"curve", "sweep", "distribution", "iterations"}) {
        std::string text = to_csv(report, kind);
        if (!text.empty()) {
            files.emplace_back(directory / (report.scenario_id + "." + kind + ".csv"), std::move(text));
        }
    }
    files.emplace_back(directory / (report.scenario_id + ".summary.json"), summarize(report).dump(2) + "\n");

    std::vector<std::filesystem::path> written;
    for (const auto& [path, text] : files) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << text;
        if (!out) {
            throw std::runtime_error("write failed for " + path.string());
        }
        written.push_back(path);
    }
    return written;
}

} // namespace difftherm::experiments
