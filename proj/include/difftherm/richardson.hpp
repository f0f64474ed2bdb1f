#pragma once

// Richardson-extrapolated central differences. Test oracle only: the
// comparison experiments use findiff.hpp, never this.

#include <functional>
#include <stdexcept>

namespace difftherm::findiff::oracle {

struct RichardsonOptions {
    double initial_step = 0.0; // 0: 0.01 * max(1, |x|)
    int max_levels = 12;
    double max_relative_error = 1e-9; // larger error estimates make the oracle unreliable
};

struct RichardsonEstimate {
    double derivative = 0.0;
    double error = 0.0; // from the last two tableau entries
    int levels = 0;
};

class OracleUnreliable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Central differences at h, h/2, h/4, ... combined as (4^k D(h/2) - D(h)) / (4^k - 1),
/// stopped once the error estimate starts growing.
RichardsonEstimate richardson_reference(const std::function<double(double)>& f, double x,
                                        const RichardsonOptions& options = {});

} // namespace difftherm::findiff::oracle
