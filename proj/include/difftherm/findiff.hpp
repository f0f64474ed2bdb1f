#pragma once

// Finite-difference baseline: forward and central quotients with an explicit
// step, and step sweeps against an AD reference. Steps are never chosen
// automatically.

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace difftherm::findiff {

using Function = std::function<double(double)>;

struct FdScheme {
    enum class Kind { forward, central };
    Kind kind = Kind::central;
    double step = 0.0;

    static FdScheme forward(double h) { return {Kind::forward, h}; }
    static FdScheme central(double h) { return {Kind::central, h}; }

    /// Throws std::invalid_argument unless step is positive and finite.
    void validate() const;
};

/// f raised while being evaluated at a perturbed point.
class FdEvaluationError : public std::runtime_error {
public:
    FdEvaluationError(double point, const std::string& what);
    double point() const noexcept { return point_; }

private:
    double point_;
};

/// (f(x+h) - f(x)) / h or (f(x+h) - f(x-h)) / (2h).
double fd_derivative(const Function& f, double x, FdScheme scheme);

struct SweepRow {
    double step = 0.0;
    std::optional<double> derivative;
    std::optional<double> deviation; // |derivative - reference|
    std::string error;               // set when the row failed

    bool ok() const noexcept { return derivative.has_value(); }
};

/// One row per step in input order; failing rows are recorded, not thrown.
std::vector<SweepRow> step_sweep(const Function& f, double x, std::span<const double> steps, double reference,
                                 FdScheme::Kind kind = FdScheme::Kind::central);

} // namespace difftherm::findiff
