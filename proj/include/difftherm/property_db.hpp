#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "difftherm/dual.hpp"

namespace difftherm {

inline constexpr double kGasConstant = 8.314462618;   // J/(mol K)
inline constexpr double kReferenceTemperature = 298.15; // K
inline constexpr double kCpMinTemperature = 150.0;
inline constexpr double kCpMaxTemperature = 500.0;

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct Component {
    std::string name;
    double tc = 0.0;    // K
    double pc = 0.0;    // Pa
    double omega = 0.0;
    std::array<double, 4> cp{}; // J/(mol K), polynomial in T
    double h_ref = 0.0; // J/mol at kReferenceTemperature
};

/// Symmetric binary interaction matrix with zero diagonal.
class BinarySet {
public:
    BinarySet() = default;
    explicit BinarySet(std::size_t n) : n_(n), k_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return k_.at(i * n_ + j); }

    /// Sets k_ij and k_ji together. i == j is rejected.
    void set(std::size_t i, std::size_t j, double value);

private:
    std::size_t n_ = 0;
    std::vector<double> k_;
};

struct PropertyPackage {
    std::vector<Component> components;
    BinarySet kij;

    std::size_t size() const noexcept { return components.size(); }
    std::size_t index_of(std::string_view name) const;
};

/// Parses a component document (YAML; schema in README). Components are
/// returned in document order after range validation.
std::vector<Component> parse_components(std::string_view document);
std::vector<Component> load_components(const std::filesystem::path& path);

/// The four-species set shipped in data/components.yaml, compiled in.
std::vector<Component> bundled_components();
std::string_view bundled_components_document();

/// Package with all k_ij = 0, plus any `kij:` overrides found in the document.
PropertyPackage make_package(std::vector<Component> components);
PropertyPackage parse_package(std::string_view document);
PropertyPackage load_package(const std::filesystem::path& path);
PropertyPackage bundled_package();

void validate(const Component& c);

/// Ideal-gas heat capacity; throws RangeError outside [150, 500] K.
template <class S>
S cp_ideal(const Component& c, const S& T)
{
    const double t = ad::primal(T);
    if (!(t >= kCpMinTemperature && t <= kCpMaxTemperature)) {
        throw RangeError("cp_ideal: T = " + std::to_string(t) + " K outside [150, 500] K for " + c.name);
    }
    return c.cp[0] + T * (c.cp[1] + T * (c.cp[2] + T * c.cp[3]));
}

/// h_ref + integral of cp from the reference temperature, in closed form.
/// Not range-checked so that finite-difference probes may step just past
/// the envelope edge.
template <class S>
S ideal_gas_enthalpy(const Component& c, const S& T)
{
    const auto antiderivative = [&c](const auto& t) {
        return t * (c.cp[0] + t * (c.cp[1] / 2.0 + t * (c.cp[2] / 3.0 + t * (c.cp[3] / 4.0))));
    };
    return c.h_ref + (antiderivative(T) - antiderivative(kReferenceTemperature));
}

} // namespace difftherm
