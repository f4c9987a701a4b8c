#include "mtrail/error.hpp"
#include "mtrail/fixture_forge.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mtrail;

// Builds catalog scenarios as real repositories:
//   <out>/repos/<name>/       the repository
//   <out>/oracles/<name>.json ground truth in the native oracle format
//   <out>/manifest.tsv        one locator per scenario
int main(int argc, char** argv) {
    CLI::App app{"Generate fixture repositories with known method histories."};
    app.name("mtrail-forge");
    std::string out;
    std::vector<std::string> only;
    bool list = false;
    app.add_option("--out", out, "Output directory (created; must not contain the scenarios yet)");
    app.add_option("--scenario", only, "Build only these scenarios (repeatable)");
    app.add_flag("--list", list, "Print scenario names and exit");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& s : standard_catalog()) {
            std::cout << s.name << "\n";
        }
        return 0;
    }
    if (out.empty()) {
        std::cerr << "error: --out is required\n";
        return 2;
    }
    try {
        const auto root = fs::absolute(out);
        fs::create_directories(root / "oracles");
        std::ofstream manifest(root / "manifest.tsv");
        for (const auto& scenario : standard_catalog()) {
            if (!only.empty() && std::find(only.begin(), only.end(), scenario.name) == only.end()) {
                continue;
            }
            const auto repo = root / "repos" / scenario.name;
            const auto built = build_scenario(scenario.steps, repo);
            std::ofstream(root / "oracles" / (scenario.name + ".json"))
                << to_native_json(to_oracle(built.truth, scenario.name, repo.string()));
            const auto& loc = built.truth.locator;
            manifest << repo.string() << '\t' << loc.commit.str() << '\t' << loc.file << '\t' << loc.name << '\t'
                     << loc.line << '\n';
            std::cout << scenario.name << "\t" << repo.string() << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 3;
    }
    return 0;
}
