#include "difftherm/property_db.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace difftherm {

namespace {

double require_number(const YAML::Node& record, const std::string& species, const char* field)
{
    const YAML::Node node = record[field];
    if (!node) {
        throw ValidationError("component '" + species + "': missing field '" + field + "'");
    }
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        throw ValidationError("component '" + species + "': field '" + field + "' is not a number");
    }
}

// Smallest value of the cp polynomial on the operating envelope: endpoints
// plus any stationary points inside it.
double cp_minimum(const Component& c)
{
    const auto cp = [&c](double t) { return c.cp[0] + t * (c.cp[1] + t * (c.cp[2] + t * c.cp[3])); };
    double lowest = std::min(cp(kCpMinTemperature), cp(kCpMaxTemperature));
    // cp'(T) = c1 + 2 c2 T + 3 c3 T^2
    const double qa = 3.0 * c.cp[3];
    const double qb = 2.0 * c.cp[2];
    const double qc = c.cp[1];
    std::vector<double> stationary;
    if (qa == 0.0) {
        if (qb != 0.0) {
            stationary.push_back(-qc / qb);
        }
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            stationary.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
            stationary.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
        }
    }
    for (double t : stationary) {
        if (t > kCpMinTemperature && t < kCpMaxTemperature) {
            lowest = std::min(lowest, cp(t));
        }
    }
    return lowest;
}

} // namespace

void BinarySet::set(std::size_t i, std::size_t j, double value)
{
    if (i >= n_ || j >= n_) {
        throw std::out_of_range("BinarySet::set: index out of range");
    }
    if (i == j) {
        throw ValidationError("BinarySet::set: diagonal k_ii is fixed at 0");
    }
    if (!std::isfinite(value)) {
        throw ValidationError("BinarySet::set: k_ij must be finite");
    }
    k_[i * n_ + j] = value;
    k_[j * n_ + i] = value;
}

std::size_t PropertyPackage::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (components[i].name == name) {
            return i;
        }
    }
    throw ValidationError("unknown component '" + std::string(name) + "'");
}

void validate(const Component& c)
{
    const auto fail = [&c](const char* field, const std::string& why) {
        throw ValidationError("component '" + c.name + "': field '" + field + "' " + why);
    };
    if (c.name.empty()) {
        throw ValidationError("component with empty name");
    }
    if (!(c.tc > 0.0) || !std::isfinite(c.tc)) {
        fail("tc", "must be positive");
    }
    if (!(c.pc > 0.0) || !std::isfinite(c.pc)) {
        fail("pc", "must be positive");
    }
    if (!(c.omega > -0.5 && c.omega < 1.0)) {
        fail("omega", "outside (-0.5, 1.0)");
    }
    if (!std::all_of(c.cp.begin(), c.cp.end(), [](double v) { return std::isfinite(v); })) {
        fail("cp", "has non-finite coefficients");
    }
    if (!(cp_minimum(c) > 0.0)) {
        fail("cp", "is not positive over [150, 500] K");
    }
    if (!std::isfinite(c.h_ref)) {
        fail("h_ref", "must be finite");
    }
}

std::vector<Component> parse_components(std::string_view document)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("component document is not well-formed: ") + e.what());
    }
    const YAML::Node list = root["components"];
    if (!list || !list.IsSequence() || list.size() == 0) {
        throw ValidationError("component document has no components");
    }

    std::vector<Component> out;
    for (const YAML::Node& record : list) {
        Component c;
        if (!record["name"]) {
            throw ValidationError("component record #" + std::to_string(out.size()) + ": missing field 'name'");
        }
        c.name = record["name"].as<std::string>();
        c.tc = require_number(record, c.name, "tc");
        c.pc = require_number(record, c.name, "pc");
        c.omega = require_number(record, c.name, "omega");
        const YAML::Node cp = record["cp"];
        if (!cp || !cp.IsSequence() || cp.size() != 4) {
            throw ValidationError("component '" + c.name + "': field 'cp' must list 4 coefficients");
        }
        for (std::size_t i = 0; i < 4; ++i) {
            c.cp[i] = cp[i].as<double>();
        }
        c.h_ref = record["h_ref"] ? record["h_ref"].as<double>() : 0.0;
        validate(c);
        for (const Component& seen : out) {
            if (seen.name == c.name) {
                throw ValidationError("component '" + c.name + "' listed twice");
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Component> load_components(const std::filesystem::path& path)
{
    return load_package(path).components;
}

PropertyPackage make_package(std::vector<Component> components)
{
    PropertyPackage pkg;
    pkg.kij = BinarySet(components.size());
    pkg.components = std::move(components);
    return pkg;
}

PropertyPackage parse_package(std::string_view document)
{
    PropertyPackage pkg = make_package(parse_components(document));
    const YAML::Node kij = YAML::Load(std::string(document))["kij"];
    if (kij) {
        if (!kij.IsSequence()) {
            throw ValidationError("'kij' must be a list of {i, j, value} records");
        }
        for (const YAML::Node& entry : kij) {
            if (!entry["i"] || !entry["j"] || !entry["value"]) {
                throw ValidationError("kij record needs i, j and value");
            }
            pkg.kij.set(pkg.index_of(entry["i"].as<std::string>()), pkg.index_of(entry["j"].as<std::string>()),
                        entry["value"].as<double>());
        }
    }
    return pkg;
}

PropertyPackage load_package(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open component file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_package(ss.str());
}

std::vector<Component> bundled_components() { return parse_components(bundled_components_document()); }

PropertyPackage bundled_package() { return parse_package(bundled_components_document()); }

} // namespace difftherm
