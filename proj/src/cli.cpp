#include "difftherm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace difftherm::cli {

using experiments::Scenario;
using experiments::ScenarioKind;
using json = nlohmann::ordered_json;

// --- config ----------------------------------------------------------------

namespace {

constexpr double kBar = 1e5;

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError("config key '" + key + "' has the wrong type");
    }
}

std::vector<double> number_list(const YAML::Node& node, const std::string& key)
{
    if (!node.IsSequence()) {
        throw ValidationError("config key '" + key + "' must be a list of numbers");
    }
    std::vector<double> out;
    for (const YAML::Node& v : node) {
        out.push_back(scalar<double>(v, key));
    }
    return out;
}

// A grid is a list of values or a {from, to, points} table.
std::vector<double> grid(const YAML::Node& node, const std::string& key, double scale)
{
    std::vector<double> values;
    if (node.IsMap()) {
        for (const auto& entry : node) {
            const auto k = entry.first.as<std::string>();
            if (k != "from" && k != "to" && k != "points") {
                throw ValidationError("config key '" + key + "." + k + "' is not recognized");
            }
        }
        if (!node["from"] || !node["to"] || !node["points"]) {
            throw ValidationError("config key '" + key + "' needs from, to and points");
        }
        const int points = scalar<int>(node["points"], key + ".points");
        if (points < 1) {
            throw ValidationError("config key '" + key + ".points' must be positive");
        }
        values = experiments::linspace(scalar<double>(node["from"], key + ".from"),
                                       scalar<double>(node["to"], key + ".to"), static_cast<std::size_t>(points));
    } else {
        values = number_list(node, key);
    }
    for (double& v : values) {
        v *= scale;
    }
    return values;
}

flash::FlashKind flash_kind(const std::string& s)
{
    if (s == "pt") {
        return flash::FlashKind::pt;
    }
    if (s == "pv") {
        return flash::FlashKind::pv;
    }
    if (s == "ph") {
        return flash::FlashKind::ph;
    }
    throw ValidationError("unknown flash kind '" + s + "' (expected pt, pv or ph)");
}

LogLevel log_level(const std::string& s)
{
    if (s == "quiet") {
        return LogLevel::quiet;
    }
    if (s == "info") {
        return LogLevel::info;
    }
    if (s == "debug") {
        return LogLevel::debug;
    }
    throw ValidationError("unknown log-level '" + s + "' (expected quiet, info or debug)");
}

} // namespace

void apply_solver_options(const YAML::Node& node, flash::FlashOptions& o)
{
    if (!node.IsMap()) {
        throw ValidationError("config key 'solver' must be a table");
    }
    for (const auto& entry : node) {
        const auto key = entry.first.as<std::string>();
        const YAML::Node& v = entry.second;
        const std::string path = "solver." + key;
        if (key == "rr-tolerance") {
            o.rr_tolerance = scalar<double>(v, path);
        } else if (key == "k-tolerance") {
            o.k_tolerance = scalar<double>(v, path);
        } else if (key == "pv-tolerance") {
            o.pv_tolerance = scalar<double>(v, path);
        } else if (key == "composition-tolerance") {
            o.composition_tolerance = scalar<double>(v, path);
        } else if (key == "ph-relative-tolerance") {
            o.ph_relative_tolerance = scalar<double>(v, path);
        } else if (key == "max-outer") {
            o.max_outer = scalar<int>(v, path);
        } else if (key == "max-substitutions") {
            o.max_substitutions = scalar<int>(v, path);
        } else if (key == "max-inner") {
            o.max_inner = scalar<int>(v, path);
        } else if (key == "t-min-k") {
            o.t_min = scalar<double>(v, path);
        } else if (key == "t-max-k") {
            o.t_max = scalar<double>(v, path);
        } else if (key == "min-derivative") {
            o.min_derivative = scalar<double>(v, path);
        } else if (key == "initial-temperature-k") {
            o.initial_temperature = scalar<double>(v, path);
        } else {
            throw ValidationError("config key '" + path + "' is not recognized");
        }
    }
    for (double tol : {o.rr_tolerance, o.k_tolerance, o.pv_tolerance, o.composition_tolerance,
                       o.ph_relative_tolerance, o.min_derivative}) {
        if (!(tol > 0.0) || !std::isfinite(tol)) {
            throw ValidationError("solver tolerances must be positive and finite");
        }
    }
    if (o.max_outer < 1 || o.max_inner < 1 || o.max_substitutions < 1) {
        throw ValidationError("solver iteration limits must be positive");
    }
    if (!(o.t_min > 0.0 && o.t_min < o.t_max)) {
        throw ValidationError("solver temperature bracket must satisfy 0 < t-min-k < t-max-k");
    }
}

Scenario parse_scenario(const YAML::Node& node)
{
    if (!node.IsMap() || !node["id"] || !node["kind"]) {
        throw ValidationError("every scenario needs 'id' and 'kind'");
    }
    const auto id = scalar<std::string>(node["id"], "id");
    Scenario s = experiments::default_scenario(experiments::scenario_kind_from_string(scalar<std::string>(node["kind"], "kind")), id);
    for (const auto& entry : node) {
        const auto key = entry.first.as<std::string>();
        const YAML::Node& v = entry.second;
        const std::string path = "scenarios[" + id + "]." + key;
        if (key == "id" || key == "kind") {
            continue;
        }
        if (key == "feed") {
            s.feed = number_list(v, path);
        } else if (key == "temperature-grid-k") {
            s.temperatures = grid(v, path, 1.0);
        } else if (key == "pressure-grid-bar") {
            s.pressures = grid(v, path, kBar);
        } else if (key == "temperature-k") {
            s.temperature = scalar<double>(v, path);
        } else if (key == "pressure-bar") {
            s.pressure = scalar<double>(v, path) * kBar;
        } else if (key == "fd-steps-k") {
            if (s.kind == ScenarioKind::dk_curves) {
                s.fd_steps_temperature = number_list(v, path);
            } else {
                s.fd_steps = number_list(v, path);
            }
        } else if (key == "fd-steps-pa") {
            s.fd_steps_pressure = number_list(v, path);
        } else if (key == "sweep-steps-k") {
            s.sweep_steps_temperature = number_list(v, path);
        } else if (key == "sweep-steps-pa") {
            s.sweep_steps_pressure = number_list(v, path);
        } else if (key == "samples") {
            const long long n = scalar<long long>(v, path);
            if (n < 1) {
                throw ValidationError("config key '" + path + "' must be positive");
            }
            s.samples = static_cast<std::size_t>(n);
        } else if (key == "seed") {
            s.seed = scalar<std::uint64_t>(v, path);
        } else if (key == "vapor-fraction") {
            s.vapor_fraction = scalar<double>(v, path);
        } else if (key == "vapor-fractions") {
            s.vapor_fractions = number_list(v, path);
        } else if (key == "flashes") {
            s.flashes.clear();
            if (!v.IsSequence()) {
                throw ValidationError("config key '" + path + "' must be a list");
            }
            for (const YAML::Node& f : v) {
                s.flashes.push_back(flash_kind(scalar<std::string>(f, path)));
            }
        } else if (key == "threads") {
            s.threads = scalar<unsigned>(v, path);
        } else if (key == "solver") {
            apply_solver_options(v, s.options);
        } else {
            throw ValidationError("config key '" + path + "' is not recognized");
        }
    }
    return s;
}

const Scenario& RunConfig::scenario(std::string_view id) const
{
    for (const Scenario& s : scenarios) {
        if (s.id == id) {
            return s;
        }
    }
    std::string known;
    for (const Scenario& s : scenarios) {
        known += (known.empty() ? "" : ", ") + s.id;
    }
    throw ValidationError("unknown scenario '" + std::string(id) + "' (config defines: " + known + ")");
}

RunConfig parse_config(std::string_view document, const std::filesystem::path& base)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("config is not well-formed: ") + e.what());
    }
    if (!root.IsMap()) {
        throw ValidationError("config must be a table");
    }
    RunConfig config;
    std::optional<unsigned> threads;
    for (const auto& entry : root) {
        const auto key = entry.first.as<std::string>();
        const YAML::Node& v = entry.second;
        if (key == "format-version") {
            if (scalar<int>(v, key) != 1) {
                throw ValidationError("unsupported config format-version");
            }
        } else if (key == "components") {
            if (!v.IsNull()) {
                std::filesystem::path p = scalar<std::string>(v, key);
                config.components_path = p.is_relative() ? base / p : p;
            }
        } else if (key == "output-dir") {
            config.output_dir = scalar<std::string>(v, key);
        } else if (key == "log-level") {
            config.log_level = log_level(scalar<std::string>(v, key));
        } else if (key == "threads") {
            threads = scalar<unsigned>(v, key);
        } else if (key == "scenarios") {
            if (!v.IsSequence()) {
                throw ValidationError("config key 'scenarios' must be a list");
            }
            for (const YAML::Node& s : v) {
                config.scenarios.push_back(parse_scenario(s));
            }
        } else {
            throw ValidationError("config key '" + key + "' is not recognized");
        }
    }
    if (config.scenarios.empty()) {
        throw ValidationError("config defines no scenarios");
    }
    for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (config.scenarios[i].id == config.scenarios[j].id) {
                throw ValidationError("scenario id '" + config.scenarios[i].id + "' defined twice");
            }
        }
        if (threads && config.scenarios[i].threads == 0) {
            config.scenarios[i].threads = *threads;
        }
    }
    if (config.components_path && !std::filesystem::exists(*config.components_path)) {
        throw ValidationError("component file " + config.components_path->string() + " does not exist");
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

// --- flash output ----------------------------------------------------------

std::string flash_result_json(const flash::FlashResult& r, const flash::FlashSpec& spec, const PropertyPackage& pkg)
{
    json j;
    j["kind"] = flash::to_string(r.kind);
    j["derivative_mode"] = spec.derivative.is_ad() ? "ad" : "fd";
    j["fd_step"] = spec.derivative.is_ad() ? json(nullptr) : json(spec.derivative.step);
    j["converged"] = r.converged;
    j["phase_state"] = flash::to_string(r.phase_state);
    j["temperature_k"] = r.T;
    j["pressure_pa"] = r.P;
    j["vapor_fraction"] = r.V;
    json species = json::array();
    for (const Component& c : pkg.components) {
        species.push_back(c.name);
    }
    j["species"] = species;
    j["feed"] = spec.feed;
    j["x"] = r.x;
    j["y"] = r.y;
    j["K"] = r.K;
    j["outer_iters"] = r.outer_iters;
    j["inner_iters"] = r.inner_iters;
    j["newton_iters"] = r.newton_iters;
    if (r.kind == flash::FlashKind::ph) {
        j["total_enthalpy_j_per_mol"] = r.total_enthalpy;
        j["outlet_enthalpy_j_per_mol"] = r.outlet_enthalpy;
    }
    json trace = json::array();
    for (const flash::TraceEntry& t : r.residual_trace) {
        trace.push_back({{"iteration", t.iteration}, {"iterate", t.iterate}, {"residual", t.residual}});
    }
    j["residual_trace"] = trace;
    return j.dump(2);
}

// --- commands --------------------------------------------------------------

namespace {

struct Logger {
    LogLevel level = LogLevel::info;
    std::ostream* err = nullptr;

    void info(const std::string& msg) const
    {
        if (level != LogLevel::quiet) {
            *err << msg << "\n";
        }
    }
    void debug(const std::string& msg) const
    {
        if (level == LogLevel::debug) {
            *err << msg << "\n";
        }
    }
};

PropertyPackage load_pkg(const std::string& components_path, const std::vector<std::string>& kij_overrides)
{
    PropertyPackage pkg = components_path.empty() ? bundled_package() : load_package(components_path);
    for (const std::string& spec : kij_overrides) {
        // name_i:name_j=value
        const auto colon = spec.find(':');
        const auto eq = spec.find('=');
        if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
            throw ValidationError("--kij expects NAME:NAME=VALUE, got '" + spec + "'");
        }
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(spec.substr(eq + 1), &used);
            if (used != spec.size() - eq - 1) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw ValidationError("--kij value is not a number in '" + spec + "'");
        }
        pkg.kij.set(pkg.index_of(spec.substr(0, colon)), pkg.index_of(spec.substr(colon + 1, eq - colon - 1)), value);
    }
    return pkg;
}

std::vector<double> checked_feed(std::vector<double> feed, std::size_t components, bool normalize)
{
    if (feed.size() != components) {
        throw ValidationError("--feed has " + std::to_string(feed.size()) + " fractions but " +
                              std::to_string(components) + " components are loaded");
    }
    for (double z : feed) {
        if (!(z >= 0.0) || !std::isfinite(z)) {
            throw ValidationError("--feed fractions must be non-negative numbers");
        }
    }
    const double total = std::accumulate(feed.begin(), feed.end(), 0.0);
    if (!(total > 0.0)) {
        throw ValidationError("--feed fractions sum to zero");
    }
    if (std::abs(total - 1.0) > 1e-6 && !normalize) {
        std::ostringstream os;
        os << std::setprecision(17) << "--feed fractions sum to " << total
           << ", not 1; pass --normalize to rescale them";
        throw ValidationError(os.str());
    }
    for (double& z : feed) {
        z /= total;
    }
    return feed;
}

struct FlashArgs {
    std::vector<double> feed;
    double pressure_bar = 0.0;
    std::optional<double> temperature;
    std::optional<double> vapor_fraction;
    std::optional<double> feed_temperature;
    std::optional<double> feed_enthalpy;
    double duty = 0.0;
    std::string mode = "ad";
    std::optional<double> fd_step;
    bool normalize = false;
    std::string components;
    std::vector<std::string> kij;
    flash::FlashOptions options;
    std::optional<double> initial_temperature;
};

int cmd_flash(const std::string& kind, const FlashArgs& a, std::ostream& out, const Logger& log)
{
    const PropertyPackage pkg = load_pkg(a.components, a.kij);
    const std::vector<double> feed = checked_feed(a.feed, pkg.size(), a.normalize);
    const double P = a.pressure_bar * kBar;

    flash::DerivativeMode mode = flash::DerivativeMode::automatic();
    if (a.mode == "fd") {
        if (!a.fd_step) {
            throw ValidationError("--mode fd needs an explicit --fd-step (steps are never chosen automatically)");
        }
        mode = flash::DerivativeMode::finite_difference(*a.fd_step);
    } else if (a.fd_step) {
        throw ValidationError("--fd-step only applies with --mode fd");
    }

    flash::FlashOptions options = a.options;
    options.initial_temperature = a.initial_temperature;
    flash::FlashSpec spec;
    if (kind == "pt") {
        if (!a.temperature) {
            throw ValidationError("flash pt needs --temperature-k");
        }
        spec = flash::FlashSpec::pt(feed, P, *a.temperature);
        spec.derivative = mode;
    } else if (kind == "pv") {
        if (!a.vapor_fraction) {
            throw ValidationError("flash pv needs --vapor-fraction");
        }
        spec = flash::FlashSpec::pv(feed, P, *a.vapor_fraction, mode);
    } else {
        if (a.feed_temperature.has_value() == a.feed_enthalpy.has_value()) {
            throw ValidationError("flash ph needs exactly one of --feed-temperature-k and --feed-enthalpy");
        }
        const double h_feed = a.feed_enthalpy ? *a.feed_enthalpy : flash::feed_enthalpy(pkg, feed, *a.feed_temperature, P);
        spec = flash::FlashSpec::ph(feed, P, h_feed, a.duty, mode);
    }
    log.debug("running " + kind + " flash, derivative mode " + mode.label());
    const flash::FlashResult result = flash::run_flash(pkg, spec, options);
    out << flash_result_json(result, spec, pkg) << "\n";
    if (!result.converged) {
        log.info("flash did not converge; see residual_trace");
        return kExitNotConverged;
    }
    return kExitOk;
}

void print_summary(const experiments::RunReport& report, std::ostream& out)
{
    const json& s = report.summary;
    out << "scenario " << report.scenario_id << " (" << experiments::to_string(report.kind) << ")\n";
    const auto num = [](const json& v) -> std::string {
        if (v.is_null()) {
            return "-";
        }
        if (v.is_number()) {
            std::ostringstream os;
            os << std::setprecision(6) << v.get<double>();
            return os.str();
        }
        return v.dump();
    };
    switch (report.kind) {
    case ScenarioKind::dk_curves:
        out << "  variable species    mode step       smoothness failures\n";
        for (const json& c : s["curves"]) {
            out << "  " << std::left << std::setw(9) << c["variable"].get<std::string>() << std::setw(11)
                << c["species"].get<std::string>() << std::setw(5) << c["mode"].get<std::string>() << std::setw(11)
                << num(c["step"]) << std::setw(11) << num(c["smoothness"]) << c["failures"].get<std::size_t>()
                << "\n";
        }
        break;
    case ScenarioKind::step_sweep:
        out << "  variable species    best-step  min-deviation smallest/min interior\n";
        for (const json& c : s["sweeps"]) {
            out << "  " << std::left << std::setw(9) << c["variable"].get<std::string>() << std::setw(11)
                << c["species"].get<std::string>() << std::setw(11) << num(c["best_step"]) << std::setw(14)
                << num(c["min_deviation"]) << std::setw(13) << num(c["smallest_to_min_ratio"])
                << (c["interior_minimum"].get<bool>() ? "yes" : "no") << "\n";
        }
        break;
    case ScenarioKind::distribution:
        out << "  mode step       failures non-finite outliers variance\n";
        for (const json& c : s["modes"]) {
            out << "  " << std::left << std::setw(5) << c["mode"].get<std::string>() << std::setw(11) << num(c["step"])
                << std::setw(9) << c["failures"].get<std::size_t>() << std::setw(11)
                << c["non_finite"].get<std::size_t>() << std::setw(9) << c["outliers"].get<std::size_t>()
                << num(c["stats"]["variance"]) << "\n";
        }
        break;
    case ScenarioKind::iterations:
        out << "  flash mode step       converged median-iters ad<=fd\n";
        for (const json& c : s["modes"]) {
            out << "  " << std::left << std::setw(6) << c["flash"].get<std::string>() << std::setw(5)
                << c["mode"].get<std::string>() << std::setw(11) << num(c["step"]) << std::setw(10)
                << (std::to_string(c["converged"].get<std::size_t>()) + "/" +
                    std::to_string(c["cells"].get<std::size_t>()))
                << std::setw(13) << num(c["median_newton_iters"])
                << (c.contains("ad_not_worse_fraction") ? num(c["ad_not_worse_fraction"]) : "-") << "\n";
        }
        break;
    }
}

int cmd_experiment(const std::string& config_path, const std::vector<std::string>& ids,
                   const std::string& output_override, const std::string& components_override, std::ostream& out,
                   Logger log, bool level_from_flag)
{
    const RunConfig config = load_config(config_path);
    if (!level_from_flag) {
        log.level = config.log_level;
    }

    std::vector<const Scenario*> selected;
    if (ids.empty()) {
        for (const Scenario& s : config.scenarios) {
            selected.push_back(&s);
        }
    } else {
        for (const std::string& id : ids) {
            selected.push_back(&config.scenario(id));
        }
    }

    std::string components = components_override;
    if (components.empty() && config.components_path) {
        components = config.components_path->string();
    }
    const PropertyPackage pkg = load_pkg(components, {});
    for (const Scenario* s : selected) {
        s->validate(pkg.size());
    }

    const std::filesystem::path dir = output_override.empty() ? config.output_dir : std::filesystem::path(output_override);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string());
    }

    // Run everything first so a failing scenario leaves no partial output.
    std::vector<experiments::RunReport> reports;
    for (const Scenario* s : selected) {
        log.info("running scenario " + s->id);
        reports.push_back(experiments::run_scenario(pkg, *s));
    }
    for (const experiments::RunReport& report : reports) {
        for (const auto& path : experiments::write_report(report, dir)) {
            log.debug("wrote " + path.string());
        }
        print_summary(report, out);
    }
    return kExitOk;
}

int cmd_components(const std::string& path, std::ostream& out)
{
    const PropertyPackage pkg = load_pkg(path, {});
    out << "name        Tc/K      Pc/Pa        omega   h_ref/(J/mol)\n";
    for (const Component& c : pkg.components) {
        out << std::left << std::setw(12) << c.name << std::setw(10) << c.tc << std::setw(13) << c.pc << std::setw(8)
            << c.omega << c.h_ref << "\n";
    }
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Differentiable SRK thermodynamics: flashes and derivative experiments", "difftherm"};
    app.require_subcommand(1);

    FlashArgs flash_args;
    std::string log_level_name = "info";
    CLI::Option* log_option = app.add_option("--log-level", log_level_name, "quiet, info or debug")->check(CLI::IsMember({"quiet", "info", "debug"}));

    CLI::App* flash_cmd = app.add_subcommand("flash", "Run one PT, PV or PH flash and print the result as JSON");
    flash_cmd->require_subcommand(1);
    std::string flash_kind_name;
    for (const char* kind : {"pt", "pv", "ph"}) {
        CLI::App* sub = flash_cmd->add_subcommand(kind, std::string(kind) + " flash");
        sub->callback([&flash_kind_name, kind] { flash_kind_name = kind; });
        auto& a = flash_args;
        sub->add_option("--feed", a.feed, "Feed mole fractions, comma separated")->required()->delimiter(',');
        sub->add_option("--pressure-bar", a.pressure_bar, "Pressure in bar")->required();
        if (std::string(kind) == "pt") {
            sub->add_option("--temperature-k", a.temperature, "Temperature in K");
        } else if (std::string(kind) == "pv") {
            sub->add_option("--vapor-fraction", a.vapor_fraction, "Target vapor fraction in [0, 1]");
        } else {
            sub->add_option("--feed-temperature-k", a.feed_temperature, "Feed temperature in K (sets feed enthalpy)");
            sub->add_option("--feed-enthalpy", a.feed_enthalpy, "Feed molar enthalpy in J/mol");
            sub->add_option("--duty", a.duty, "Heat duty in J per mol of feed");
        }
        if (std::string(kind) != "pt") {
            sub->add_option("--initial-temperature-k", a.initial_temperature, "Newton starting temperature");
        }
        sub->add_option("--mode", a.mode, "Derivative mode: ad or fd")->check(CLI::IsMember({"ad", "fd"}));
        sub->add_option("--fd-step", a.fd_step, "Central-difference step (K) for --mode fd");
        sub->add_flag("--normalize", a.normalize, "Rescale --feed to sum to 1");
        sub->add_option("--components", a.components, "Component data file (YAML)");
        sub->add_option("--kij", a.kij, "Binary interaction override NAME:NAME=VALUE (repeatable)");
        sub->add_option("--rr-tolerance", a.options.rr_tolerance);
        sub->add_option("--k-tolerance", a.options.k_tolerance);
        sub->add_option("--pv-tolerance", a.options.pv_tolerance);
        sub->add_option("--composition-tolerance", a.options.composition_tolerance);
        sub->add_option("--ph-relative-tolerance", a.options.ph_relative_tolerance);
        sub->add_option("--max-outer", a.options.max_outer);
        sub->add_option("--max-substitutions", a.options.max_substitutions);
        sub->add_option("--max-inner", a.options.max_inner);
        sub->add_option("--t-min-k", a.options.t_min);
        sub->add_option("--t-max-k", a.options.t_max);
    }

    CLI::App* experiment_cmd = app.add_subcommand("experiment", "Run scenarios from a config file");
    std::string config_path;
    std::vector<std::string> scenario_ids;
    std::string output_dir;
    std::string experiment_components;
    experiment_cmd->add_option("--config", config_path, "Config file (YAML)")->required();
    experiment_cmd->add_option("--scenario", scenario_ids, "Scenario id (repeatable; default: all)");
    experiment_cmd->add_option("--output-dir", output_dir, "Overrides the config's output-dir");
    experiment_cmd->add_option("--components", experiment_components, "Overrides the config's component file");

    CLI::App* components_cmd = app.add_subcommand("components", "List the loaded component set");
    std::string components_path;
    components_cmd->add_option("--components", components_path, "Component data file (YAML)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help requests exit 0; every parse failure maps to the error status.
        return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    }

    Logger log{LogLevel::info, &err};
    try {
        log.level = log_level(log_level_name);
        if (flash_cmd->parsed()) {
            return cmd_flash(flash_kind_name, flash_args, out, log);
        }
        if (experiment_cmd->parsed()) {
            return cmd_experiment(config_path, scenario_ids, output_dir, experiment_components, out, log,
                                  log_option->count() > 0);
        }
        return cmd_components(components_path, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

} // namespace difftherm::cli
