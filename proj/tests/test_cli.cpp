#include "doctest.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

// Path to the CLI under test: LSC_CLI (set by ctest), falling back to the
// build-tree location next to this test binary for direct invocations.
std::string cli_path() {
    if (const char* env = std::getenv("LSC_CLI")) return env;
    std::error_code ec;
    const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const auto candidate = self.parent_path().parent_path() / "lsc";
        if (std::filesystem::exists(candidate)) return candidate.string();
    }
    return {};
}

CmdResult run(const std::string& args) {
    const std::string cli = cli_path();
    REQUIRE_MESSAGE(!cli.empty(),
                    "LSC_CLI env var must point at the CLI binary");
    const std::string command = cli + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult result;
    std::array<char, 4096> buffer;
    while (std::fgets(buffer.data(), static_cast<int>(buffer.size()), pipe))
        result.output += buffer.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

const char* kSmokeConfig = R"({
  "label": "21", "n": 11,
  "model": {"hidden": [32]},
  "loss": "cosine", "epochs": 5, "batch_size": 16, "lr": 0.003, "seed": 1,
  "dataset": {"n_classes": 200, "input_dim": 16, "samples_per_class": 10,
              "noise_sigma": 0.01, "seed": 5}
})";

} // namespace

TEST_CASE("cli sysinfo") {
    auto r = run("sysinfo --label 21 --n 384");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("n_vects: 28090752") != std::string::npos);
    CHECK(r.output.find("0.6666") != std::string::npos);
    CHECK(r.output.find("config_hash:") != std::string::npos);

    r = run("sysinfo --label P --n 7");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("n_vects: 5040") != std::string::npos);

    r = run("sysinfo --label 22 --n 5");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("zero") != std::string::npos);
}

TEST_CASE("cli nmin") {
    auto r = run("nmin --label 21 --classes 1000");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("n_min: 14") != std::string::npos);
    CHECK(run("nmin --label 11 --classes 5000").output.find("n_min: 72") !=
          std::string::npos);
    CHECK(run("nmin --label 21 --classes 600000").output.find("n_min: 108") !=
          std::string::npos);
}

TEST_CASE("cli gen") {
    const auto out = temp_file("lsc_cli_gen.csv");
    const std::string base =
        "gen --label 21 --n 14 --classes 1000 --strategy shuffled --seed 9 --out " +
        out.string();
    auto r1 = run(base);
    CHECK(r1.exit_code == 0);
    const auto pos = r1.output.find("checksum:");
    REQUIRE(pos != std::string::npos);
    const std::string first = read_file(out);
    auto r2 = run(base);
    CHECK(r2.output.substr(r2.output.find("checksum:")) ==
          r1.output.substr(pos)); // same seed, same checksum
    CHECK(read_file(out) == first);

    auto r3 = run("gen --label 11 --n 3 --classes 10 --out " + out.string());
    CHECK(r3.exit_code == 2); // capacity
    std::filesystem::remove(out);
}

TEST_CASE("cli train: smoke run, determinism, divergence exit code") {
    const auto config = temp_file("lsc_cli_train.json");
    std::ofstream(config) << kSmokeConfig;
    const auto metrics_a = temp_file("lsc_cli_metrics_a.csv");
    const auto metrics_b = temp_file("lsc_cli_metrics_b.csv");

    auto r = run("train --config " + config.string() + " --out-metrics " +
                 metrics_a.string());
    CHECK(r.exit_code == 0);
    const std::string a = read_file(metrics_a);
    CHECK(a.starts_with("epoch,loss,accuracy,lr,wall_ms,diverged"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 6); // header + 5 rows

    run("train --config " + config.string() + " --out-metrics " + metrics_b.string());
    // identical apart from wall-clock timings
    auto strip_wall = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string field;
            int idx = 0;
            while (std::getline(ls, field, ',')) {
                if (idx != 4) out += field + ",";
                ++idx;
            }
            out += "\n";
        }
        return out;
    };
    CHECK(strip_wall(a) == strip_wall(read_file(metrics_b)));

    std::filesystem::remove(config);
    std::filesystem::remove(metrics_a);
    std::filesystem::remove(metrics_b);
}

TEST_CASE("cli usage errors exit 1") {
    CHECK(run("sysinfo --label nope --n 5").exit_code == 1);
    CHECK(run("train --config /nonexistent.json").exit_code == 1);
    CHECK(run("bogus-subcommand").exit_code == 1);
}
