#pragma once

// Shared test helpers: fixture tables and small seeded generators.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef DIFFTHERM_FIXTURE_DIR
#error "DIFFTHERM_FIXTURE_DIR must be defined by the build"
#endif

namespace testing_support {

inline std::string fixture_path(const std::string& name) { return std::string(DIFFTHERM_FIXTURE_DIR) + "/" + name; }

/// Non-comment lines of a fixture file, split on whitespace.
inline std::vector<std::vector<std::string>> fixture_rows(const std::string& name)
{
    std::ifstream in(fixture_path(name));
    if (!in) {
        throw std::runtime_error("missing fixture " + name);
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        std::vector<std::string> row;
        for (std::string tok; ss >> tok;) {
            row.push_back(tok);
        }
        rows.push_back(row);
    }
    return rows;
}

/// key -> numbers, for "key v1 v2 ..." fixtures.
inline std::map<std::string, std::vector<double>> fixture_table(const std::string& name)
{
    std::map<std::string, std::vector<double>> out;
    for (const auto& row : fixture_rows(name)) {
        std::vector<double> values;
        for (std::size_t i = 1; i < row.size(); ++i) {
            values.push_back(std::stod(row[i]));
        }
        out[row[0]] = values;
    }
    return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Seeded uniform generator for hand-rolled property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::vector<double> composition(std::size_t n)
    {
        std::vector<double> z(n);
        double total = 0.0;
        for (double& v : z) {
            v = uniform(0.01, 1.0);
            total += v;
        }
        for (double& v : z) {
            v /= total;
        }
        return z;
    }

private:
    std::mt19937_64 rng_;
};

} // namespace testing_support
