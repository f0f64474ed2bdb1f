#include "difftherm/richardson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace difftherm::findiff::oracle {

RichardsonEstimate richardson_reference(const std::function<double(double)>& f, double x,
                                        const RichardsonOptions& options)
{
    double h = options.initial_step > 0.0 ? options.initial_step : 0.01 * std::max(1.0, std::abs(x));
    const int n = std::max(2, options.max_levels);
    const auto central = [&f, x](double step) { return (f(x + step) - f(x - step)) / (2.0 * step); };

    std::vector<std::vector<double>> table(n, std::vector<double>(n, 0.0));
    table[0][0] = central(h);
    RichardsonEstimate best{table[0][0], std::numeric_limits<double>::infinity(), 1};

    for (int i = 1; i < n; ++i) {
        h /= 2.0;
        table[i][0] = central(h);
        double factor = 4.0;
        for (int j = 1; j <= i; ++j) {
            table[i][j] = (factor * table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
            factor *= 4.0;
            const double err = std::max(std::abs(table[i][j] - table[i][j - 1]),
                                        std::abs(table[i][j] - table[i - 1][j - 1]));
            if (err <= best.error) {
                best = {table[i][j], err, i + 1};
            }
        }
        if (std::abs(table[i][i] - table[i - 1][i - 1]) >= 2.0 * best.error) {
            break;
        }
    }

    const double allowed = options.max_relative_error * std::max(std::abs(best.derivative), 1e-300);
    if (!std::isfinite(best.derivative) || !(best.error <= allowed)) {
        throw OracleUnreliable("richardson: error estimate " + std::to_string(best.error) + " exceeds "
                               + std::to_string(allowed) + " at x = " + std::to_string(x));
    }
    return best;
}

} // namespace difftherm::findiff::oracle
