#include "difftherm/findiff.hpp"

#include <cmath>

namespace difftherm::findiff {

void FdScheme::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw std::invalid_argument("finite-difference step must be positive and finite, got " + std::to_string(step));
    }
}

FdEvaluationError::FdEvaluationError(double point, const std::string& what)
    : std::runtime_error("finite difference: evaluation at " + std::to_string(point) + " failed: " + what),
      point_(point)
{
}

namespace {

double evaluate_at(const Function& f, double point)
{
    try {
        return f(point);
    } catch (const FdEvaluationError&) {
        throw;
    } catch (const std::exception& e) {
        throw FdEvaluationError(point, e.what());
    }
}

} // namespace

double fd_derivative(const Function& f, double x, FdScheme scheme)
{
    scheme.validate();
    const double h = scheme.step;
    if (scheme.kind == FdScheme::Kind::forward) {
        return (evaluate_at(f, x + h) - evaluate_at(f, x)) / h;
    }
    return (evaluate_at(f, x + h) - evaluate_at(f, x - h)) / (2.0 * h);
}

std::vector<SweepRow> step_sweep(const Function& f, double x, std::span<const double> steps, double reference,
                                 FdScheme::Kind kind)
{
    std::vector<SweepRow> rows;
    rows.reserve(steps.size());
    for (double h : steps) {
        SweepRow row;
        row.step = h;
        try {
            const double d = fd_derivative(f, x, FdScheme{kind, h});
            row.derivative = d;
            row.deviation = std::abs(d - reference);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace difftherm::findiff
