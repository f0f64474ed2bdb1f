#pragma once

// Scenario runners that turn the library into data tables: dK/dT and dK/dP
// curves, finite-difference step sweeps, a derivative distribution over
// random feeds, and AD-vs-FD Newton iteration counts.
//
// Every runner is deterministic for a given scenario. Cells may be evaluated
// on several threads but records always come back in grid order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "difftherm/flash.hpp"
#include "difftherm/property_db.hpp"

namespace difftherm::experiments {

enum class ScenarioKind { dk_curves, step_sweep, distribution, iterations };

const char* to_string(ScenarioKind k) noexcept;
ScenarioKind scenario_kind_from_string(const std::string& s);

struct Scenario {
    std::string id;
    ScenarioKind kind = ScenarioKind::dk_curves;
    std::vector<double> feed{0.25, 0.25, 0.25, 0.25};

    // dk-curves: T curve at `pressure`, P curve at `temperature`.
    std::vector<double> temperatures; // K
    std::vector<double> pressures;    // Pa
    double temperature = 250.0;       // K
    double pressure = 18e5;           // Pa
    std::vector<double> fd_steps_temperature{1e-1, 1e-3, 1e-6, 1e-8}; // K
    std::vector<double> fd_steps_pressure{50.0, 10.0, 5.0, 1.0, 0.1}; // Pa

    // step-sweep
    std::vector<double> sweep_steps_temperature{10.0, 1.0, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    std::vector<double> sweep_steps_pressure{50.0, 10.0, 5.0, 1.0, 0.1};

    // distribution / iterations
    std::size_t samples = 500;
    std::uint64_t seed = 20240601;
    double vapor_fraction = 0.7;
    std::vector<double> vapor_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> fd_steps{1e-3, 1e-6};      // K, distribution study
    std::vector<flash::FlashKind> flashes{flash::FlashKind::pv, flash::FlashKind::ph};

    flash::FlashOptions options;
    unsigned threads = 0; // 0: hardware concurrency

    /// Throws ValidationError on empty grids, bad steps or a bad feed.
    void validate(std::size_t components) const;
};

/// Scenario with the defaults for `kind`; dk-curves gets the 101-point
/// grids over [200, 300] K and [10, 19] bar.
Scenario default_scenario(ScenarioKind kind, std::string id = {});

/// `points` evenly spaced values from `from` to `to` inclusive.
std::vector<double> linspace(double from, double to, std::size_t points);

// --- records ---------------------------------------------------------------

struct CurveRecord {
    std::string variable; // "T" or "P"
    std::size_t species = 0;
    std::string mode; // "ad" or "fd"
    std::optional<double> step;
    std::size_t index = 0;
    double temperature = 0.0;
    double pressure = 0.0;
    std::optional<double> derivative;
    std::string status = "ok";
};

struct SweepRecord {
    std::string variable;
    std::size_t species = 0;
    double temperature = 0.0;
    double pressure = 0.0;
    double step = 0.0;
    double reference = 0.0;
    std::optional<double> derivative;
    std::optional<double> deviation;
    std::string status = "ok";
};

struct DistributionRecord {
    std::size_t sample = 0;
    std::vector<double> feed;
    std::string mode;
    std::optional<double> step;
    double temperature = 0.0;
    std::optional<double> derivative; // may hold a non-finite FD value
    std::string status = "ok";
};

struct IterationRecord {
    std::size_t sample = 0;
    double vapor_fraction = 0.0;
    flash::FlashKind flash = flash::FlashKind::pv;
    std::string mode;
    std::optional<double> step;
    bool converged = false;
    int newton_iters = 0;
    int outer_iters = 0;
    int inner_iters = 0;
    std::optional<double> temperature;
    std::string status = "ok";
};

struct RunReport {
    std::string scenario_id;
    ScenarioKind kind = ScenarioKind::dk_curves;
    std::vector<std::string> species;
    std::vector<CurveRecord> curve;
    std::vector<SweepRecord> sweep;
    std::vector<DistributionRecord> distribution;
    std::vector<IterationRecord> iterations;
    nlohmann::ordered_json summary;
};

// --- runners ---------------------------------------------------------------

RunReport run_dk_curves(const PropertyPackage& pkg, const Scenario& scenario);
RunReport run_step_sweep(const PropertyPackage& pkg, const Scenario& scenario);
RunReport run_distribution_study(const PropertyPackage& pkg, const Scenario& scenario);
RunReport run_iteration_benchmark(const PropertyPackage& pkg, const Scenario& scenario);
RunReport run_scenario(const PropertyPackage& pkg, const Scenario& scenario);

/// Equilibrium phase compositions used for K derivatives at (T, P):
/// negative-flash PT solution, so x and y stay defined and smooth just
/// outside the two-phase envelope.
flash::PhaseCompositions<double> curve_compositions(const PropertyPackage& pkg, std::span<const double> feed,
                                                    double T, double P);

// --- statistics ------------------------------------------------------------

struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0; // sample variance (n - 1); 0 for fewer than two values
    double min = 0.0;
    double max = 0.0;
};

Moments moments(std::span<const double> values);
double median(std::vector<double> values);
/// Linear-interpolation quantile (the common "type 7" definition).
double quantile(std::vector<double> values, double q);

/// max |adjacent change| / median |adjacent change|; absent below 3 points.
/// A zero median with a nonzero maximum gives +infinity.
std::optional<double> smoothness_metric(std::span<const double> curve);

struct TukeyFence {
    double q1 = 0.0;
    double q3 = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Fence at [q1 - k IQR, q3 + k IQR]; k = 10 unless stated.
TukeyFence tukey_fence(std::span<const double> values, double k = 10.0);
std::size_t count_outliers(std::span<const double> values, const TukeyFence& fence);

/// Flat-Dirichlet feed compositions from normalized unit exponentials.
std::vector<std::vector<double>> sample_compositions(std::size_t components, std::size_t count, std::uint64_t seed);

/// Runs body(i) for i in [0, count) on up to `threads` workers; exceptions
/// escaping body are rethrown after all workers stop (lowest index first).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Summary statistics recomputed from the records alone.
nlohmann::ordered_json summarize(const RunReport& report);

// --- output ----------------------------------------------------------------

/// Full round-trip formatting (17 significant digits).
std::string format_number(double v);

/// CSV text for one record kind ("curve", "sweep", "distribution",
/// "iterations"); empty when the report has no such records.
std::string to_csv(const RunReport& report, const std::string& kind);

/// Writes `<id>.<kind>.csv` for each non-empty kind plus `<id>.summary.json`
/// into `directory` (created if absent). Returns the written paths.
std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& directory);

} // namespace difftherm::experiments
