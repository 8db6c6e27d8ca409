#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "vortexgate/errors.hpp"
#include "vortexgate/scenario.hpp"

namespace fs = std::filesystem;
using namespace vortexgate;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every artifact except timings must match byte for byte.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& diff)
{
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        if (name == "timings.json")
            continue;
        if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) {
            diff = name.string();
            return false;
        }
    }
    return true;
}

std::string one_line(const RunSummary& r, double seconds)
{
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%s: fidelity %.6f  residual %.3g  m=+1 %.4f  m=-1 %.4f  clipped %.3g  (%.2f s)", r.name.c_str(),
                  r.fidelity, r.residual, r.spectrum.fraction(1), r.spectrum.fraction(-1), r.clipped_norm, seconds);
    return buf;
}

struct Outcome {
    int code = 0;
    std::string message;
};

Outcome run_one(const fs::path& config, const fs::path& out, bool seed_check)
{
    try {
        const Scenario s = load_scenario(config);
        if (seed_check) {
            const fs::path a = out / ".seed-check-a", b = out / ".seed-check-b";
            run_scenario(s, a);
            run_scenario(s, b);
            std::string diff;
            const bool same = same_outputs(a, b, diff);
            fs::remove_all(a);
            fs::remove_all(b);
            if (!same)
                return {kExitNumerical, s.name + ": repeated runs differ in " + diff};
        }
        const RunSummary r = run_scenario(s, out);
        return {0, one_line(r, r.timings.total) + (seed_check ? "  [seed-check ok]" : "")};
    } catch (const ConfigError& e) {
        return {kExitConfig, std::string("config error: ") + e.what()};
    } catch (const SamplingError& e) {
        return {kExitNumerical, config.string() + ": sampling error: " + e.what()};
    } catch (const InfeasibleGeometry& e) {
        return {kExitNumerical, config.string() + ": infeasible geometry: " + e.what()};
    } catch (const std::exception& e) {
        return {kExitNumerical, config.string() + ": " + e.what()};
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Electron vortex qubit simulator"};
    app.require_subcommand(1);
    auto* run = app.add_subcommand("run", "Run one scenario, or a directory of them");
    std::string config, out, batch;
    bool seed_check = false;
    auto* cfg_opt = run->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory")->required();
    auto* batch_opt = run->add_option("--batch", batch, "Directory of *.cfg scenarios run in parallel")
                          ->check(CLI::ExistingDirectory);
    run->add_flag("--seed-check", seed_check, "Run twice and require identical outputs");
    cfg_opt->excludes(batch_opt);

    try {
        app.parse(argc, argv);
        if (config.empty() && batch.empty())
            throw CLI::RequiredError("--config or --batch");
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (!config.empty()) {
        const Outcome o = run_one(config, out, seed_check);
        (o.code == 0 ? std::cout : std::cerr) << o.message << "\n";
        return o.code;
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(batch))
        if (entry.path().extension() == ".cfg")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "no .cfg files in " << batch << "\n";
        return kExitConfig;
    }

    std::vector<Outcome> outcomes(files.size());
    std::atomic<std::size_t> next{0};
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(files.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < files.size(); i = next++)
                outcomes[i] = run_one(files[i], fs::path(out) / files[i].stem(), seed_check);
        });
    for (auto& t : pool)
        t.join();

    int rc = 0;
    for (const auto& o : outcomes) {
        (o.code == 0 ? std::cout : std::cerr) << o.message << "\n";
        rc = std::max(rc, o.code);
    }
    return rc;
}
