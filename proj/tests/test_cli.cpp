#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "difftherm/cli.hpp"

using namespace difftherm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "difftherm");
    std::vector<const char*> argv;
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name)
    {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSmallConfig = R"(format-version: 1
output-dir: out
log-level: quiet
scenarios:
  - id: curves
    kind: dk-curves
    temperature-grid-k: {from: 220, to: 280, points: 7}
    pressure-grid-bar: [12, 15, 18]
    fd-steps-k: [1.0e-3]
    fd-steps-pa: [10]
  - id: iters
    kind: iterations
    samples: 2
    seed: 5
    vapor-fractions: [0.5]
    flashes: [pv]
    fd-steps-k: [1.0e-3]
)";

} // namespace

TEST(CliFlash, PtPrintsJsonAndExitsZero)
{
    const Outcome o = invoke({"flash", "pt", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--temperature-k",
                              "250"});
    ASSERT_EQ(o.code, cli::kExitOk) << o.err;
    const auto j = nlohmann::json::parse(o.out);
    EXPECT_NEAR(j["vapor_fraction"].get<double>(), 0.4974968886995711, 1e-8);
    EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(CliFlash, PvAndPhRun)
{
    EXPECT_EQ(invoke({"flash", "pv", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--vapor-fraction", "0.5"})
                  .code,
              cli::kExitOk);
    EXPECT_EQ(invoke({"flash", "pv", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--vapor-fraction", "0.5",
                      "--mode", "fd", "--fd-step", "1e-3"})
                  .code,
              cli::kExitOk);
    const Outcome ph = invoke({"flash", "ph", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18",
                               "--feed-temperature-k", "250", "--duty", "1000"});
    ASSERT_EQ(ph.code, cli::kExitOk) << ph.err;
    EXPECT_NEAR(nlohmann::json::parse(ph.out)["temperature_k"].get<double>(), 254.0851497463393, 1e-4);
}

TEST(CliFlash, BadArgumentsExitOne)
{
    const Outcome unnormalized =
        invoke({"flash", "pt", "--feed", "0.3,0.2,0.2,0.2", "--pressure-bar", "18", "--temperature-k", "250"});
    EXPECT_EQ(unnormalized.code, cli::kExitError);
    EXPECT_NE(unnormalized.err.find("--normalize"), std::string::npos);
    EXPECT_EQ(invoke({"flash", "pt", "--feed", "0.3,0.2,0.2,0.2", "--pressure-bar", "18", "--temperature-k", "250",
                      "--normalize"})
                  .code,
              cli::kExitOk);
    EXPECT_EQ(invoke({"flash", "pt", "--feed", "0.5,0.5", "--pressure-bar", "18", "--temperature-k", "250"}).code,
              cli::kExitError);
    EXPECT_EQ(invoke({"flash", "pv", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--vapor-fraction", "0.5",
                      "--mode", "fd"})
                  .code,
              cli::kExitError);
    EXPECT_EQ(invoke({"flash", "pv", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--vapor-fraction", "0.5",
                      "--fd-step", "1e-3"})
                  .code,
              cli::kExitError);
    EXPECT_EQ(invoke({"flash", "ph", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18", "--duty", "0"}).code,
              cli::kExitError);
    EXPECT_EQ(invoke({"flash", "pt", "--pressure-bar", "18"}).code, cli::kExitError);
    EXPECT_EQ(invoke({"bogus"}).code, cli::kExitError);
}

TEST(CliFlash, IterationLimitExitsTwo)
{
    const Outcome o = invoke({"flash", "pv", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18",
                              "--vapor-fraction", "0.5", "--max-inner", "2"});
    EXPECT_EQ(o.code, cli::kExitNotConverged);
    EXPECT_FALSE(nlohmann::json::parse(o.out)["converged"].get<bool>());
}

TEST(CliFlash, KijOverrideChangesTheResult)
{
    const std::vector<std::string> base{"flash", "pt", "--feed", "0.25,0.25,0.25,0.25", "--pressure-bar", "18",
                                        "--temperature-k", "250"};
    std::vector<std::string> with = base;
    with.insert(with.end(), {"--kij", "methane:propane=0.05"});
    const Outcome a = invoke(base);
    const Outcome b = invoke(with);
    ASSERT_EQ(b.code, cli::kExitOk) << b.err;
    EXPECT_NE(nlohmann::json::parse(a.out)["vapor_fraction"].get<double>(), nlohmann::json::parse(b.out)["vapor_fraction"].get<double>());
    with.back() = "methane:xenon=0.05";
    EXPECT_EQ(invoke(with).code, cli::kExitError);
}

TEST(CliHelp, ExitsZero)
{
    EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
    EXPECT_EQ(invoke({"flash", "pt", "--help"}).code, cli::kExitOk);
}

TEST(CliComponents, ListsTheBundledSet)
{
    const Outcome o = invoke({"components"});
    ASSERT_EQ(o.code, cli::kExitOk);
    for (const char* name : {"methane", "ethylene", "ethane", "propane"}) {
        EXPECT_NE(o.out.find(name), std::string::npos);
    }
}

TEST(CliConfig, ParsesScenariosAndGrids)
{
    const cli::RunConfig c = cli::parse_config(kSmallConfig);
    ASSERT_EQ(c.scenarios.size(), 2u);
    EXPECT_EQ(c.output_dir, "out");
    EXPECT_EQ(c.log_level, cli::LogLevel::quiet);
    const auto& curves = c.scenario("curves");
    EXPECT_EQ(curves.temperatures.size(), 7u);
    EXPECT_EQ(curves.temperatures.back(), 280.0);
    EXPECT_EQ(curves.pressures, (std::vector<double>{12e5, 15e5, 18e5}));
    EXPECT_EQ(c.scenario("iters").samples, 2u);
    EXPECT_THROW((void)c.scenario("absent"), ValidationError);
}

TEST(CliConfig, RejectsBadDocuments)
{
    EXPECT_THROW((void)cli::parse_config("format-version: 2\nscenarios: []\n"), ValidationError);
    EXPECT_THROW((void)cli::parse_config("format-version: 1\nsurprise: 1\nscenarios: []\n"), ValidationError);
    EXPECT_THROW((void)cli::parse_config(std::string(kSmallConfig) + "  - id: curves\n    kind: step-sweep\n"),
                 ValidationError);
    EXPECT_THROW((void)cli::parse_config("format-version: 1\nscenarios:\n  - id: x\n    kind: nope\n"),
                 ValidationError);
    EXPECT_THROW((void)cli::parse_config("format-version: 1\nscenarios:\n  - id: x\n    kind: step-sweep\n    oops: 3\n"),
                 ValidationError);
    EXPECT_THROW((void)cli::parse_config("format-version: 1\ncomponents: missing.yaml\nscenarios: []\n", "/nonexistent"),
                 ValidationError);
    EXPECT_THROW((void)cli::load_config("/nonexistent/config.yaml"), ValidationError);
}

TEST(CliExperiment, WritesFilesAndRerunsAreByteIdentical)
{
    TempDir dir("difftherm_cli_experiment");
    const fs::path config = dir.path() / "config.yaml";
    std::ofstream(config) << kSmallConfig;
    const fs::path first = dir.path() / "first";
    const fs::path second = dir.path() / "second";
    const Outcome a = invoke({"experiment", "--config", config.string(), "--output-dir", first.string()});
    ASSERT_EQ(a.code, cli::kExitOk) << a.err;
    const Outcome b = invoke({"experiment", "--config", config.string(), "--output-dir", second.string()});
    ASSERT_EQ(b.code, cli::kExitOk) << b.err;
    for (const char* name : {"curves.curve.csv", "curves.summary.json", "iters.iterations.csv", "iters.summary.json"}) {
        ASSERT_TRUE(fs::exists(first / name)) << name;
        EXPECT_EQ(read_file(first / name), read_file(second / name)) << name;
    }
}

TEST(CliExperiment, ScenarioSelectionAndErrors)
{
    TempDir dir("difftherm_cli_selection");
    const fs::path config = dir.path() / "config.yaml";
    std::ofstream(config) << kSmallConfig;
    const fs::path out = dir.path() / "out";
    const Outcome one = invoke({"experiment", "--config", config.string(), "--scenario", "iters", "--output-dir",
                                out.string()});
    ASSERT_EQ(one.code, cli::kExitOk) << one.err;
    EXPECT_TRUE(fs::exists(out / "iters.iterations.csv"));
    EXPECT_FALSE(fs::exists(out / "curves.curve.csv"));

    const fs::path none = dir.path() / "none";
    EXPECT_EQ(invoke({"experiment", "--config", config.string(), "--scenario", "missing", "--output-dir",
                      none.string()})
                  .code,
              cli::kExitError);
    EXPECT_FALSE(fs::exists(none));
    EXPECT_EQ(invoke({"experiment", "--config", (dir.path() / "absent.yaml").string()}).code, cli::kExitError);
}
