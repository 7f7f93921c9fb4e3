/*
 * Copyright 2026 The nigprate Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace nigprate {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "nigprate");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = tools::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    const std::string s = slurp(p);
    return s.substr(0, s.find('\n'));
}

// Checksum from the system tool, independent of the library under test.
std::string external_sha256(const fs::path& p) {
    const std::string cmd = "sha256sum '" + p.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {};
    char buf[128] = {};
    const std::size_t n = std::fread(buf, 1, 64, pipe);
    pclose(pipe);
    return std::string(buf, n);
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("nigprate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        config_ = dir_ / "small.yaml";
        std::ofstream(config_) << "n_sensors: 25\nn_test_points: 4\nn_trials: 12\nmaster_seed: 5\n"
                                  "demo_grid_points: 21\n";
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::vector<std::string> common(const std::string& sub, const std::string& out) const {
        return {sub, "--config", config_.string(), "--out-dir", (dir_ / out).string()};
    }

    fs::path dir_;
    fs::path config_;
};

TEST_F(Cli, SelftestPasses) {
    const Result r = run({"selftest"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(Cli, EverySubcommandWritesItsCsvContract) {
    struct Case {
        std::vector<std::string> extra;
        std::string sub;
        std::vector<std::pair<std::string, std::string_view>> files;
    };
    const std::vector<Case> cases{
        {{}, "simulate", {{"outage.csv", kSweepHeader}, {"records.csv", kRecordsHeader}}},
        {{"--grid", "0,10"}, "sweep-sigma-x", {{"sweep_sigma_x.csv", kSweepHeader}}},
        {{"--sigma-x-grid", "10", "--high", "6", "--target", "0.05", "--curve-max", "0.1"},
         "sweep-margin",
         {{"sweep_margin.csv", kMarginHeader}, {"margin_curve.csv", kMarginCurveHeader}}},
        {{"--margins", "pure_gp=0.3,nigp1=0.2,nigp2=0.1"}, "rate-cdf", {{"rate_cdf.csv", kCdfHeader}}},
        {{}, "demo-1d", {{"demo_1d.csv", kProfileHeader}}},
    };
    for (const auto& c : cases) {
        auto args = common(c.sub, c.sub);
        args.insert(args.end(), c.extra.begin(), c.extra.end());
        const Result r = run(args);
        ASSERT_EQ(r.code, 0) << c.sub << ": " << r.err;
        for (const auto& [name, header] : c.files) {
            EXPECT_EQ(first_line(dir_ / c.sub / name), header) << c.sub << "/" << name;
        }
        EXPECT_TRUE(fs::exists(dir_ / c.sub / "config.yaml"));
        EXPECT_TRUE(fs::exists(dir_ / c.sub / "manifest.json"));
    }
    // 21 grid points for each of four methods, plus the header.
    const std::string demo = slurp(dir_ / "demo-1d" / "demo_1d.csv");
    EXPECT_EQ(std::count(demo.begin(), demo.end(), '\n'), 1 + 4 * 21);
}

TEST_F(Cli, ManifestRecordsChecksumsAndConfig) {
    auto args = common("sweep-sigma-x", "m");
    args.insert(args.end(), {"--grid", "5", "--seed", "77"});
    ASSERT_EQ(run(args).code, 0);
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "m" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "sweep-sigma-x");
    EXPECT_EQ(manifest["master_seed"], 77);
    EXPECT_EQ(manifest["aborted_trials"], 0);
    EXPECT_EQ(manifest["parameters"]["grid"], nlohmann::json::array({5.0}));
    for (const auto& name : {"sweep_sigma_x.csv", "config.yaml"}) {
        EXPECT_EQ(manifest["outputs"][name].get<std::string>(), external_sha256(dir_ / "m" / name)) << name;
    }
    // The stored config reproduces the run.
    const SimConfig stored = parse_config(dir_ / "m" / "config.yaml");
    EXPECT_EQ(stored.master_seed, 77u);
    EXPECT_EQ(stored.n_trials, 12);
    EXPECT_EQ(manifest["config"].get<std::string>(), serialize_config(stored));
}

TEST_F(Cli, OutputsAreByteIdenticalAcrossThreadCounts) {
    for (const std::string threads : {"1", "3"}) {
        auto args = common("simulate", "t" + threads);
        args.insert(args.end(), {"--threads", threads});
        ASSERT_EQ(run(args).code, 0);
    }
    for (const auto& name : {"outage.csv", "records.csv", "config.yaml"}) {
        EXPECT_EQ(slurp(dir_ / "t1" / name), slurp(dir_ / "t3" / name)) << name;
    }
}

TEST_F(Cli, MethodSubsetAndOverrides) {
    auto args = common("simulate", "s");
    args.insert(args.end(), {"--methods", "nigp2,path_loss", "--trials", "3"});
    ASSERT_EQ(run(args).code, 0);
    const std::string outage = slurp(dir_ / "s" / "outage.csv");
    EXPECT_NE(outage.find("\nnigp2,"), std::string::npos);
    EXPECT_EQ(outage.find("pure_gp"), std::string::npos);
    const std::string records = slurp(dir_ / "s" / "records.csv");
    EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 1 + 3 * 4 * 2);
}

TEST_F(Cli, UsageAndConfigErrorsExitOne) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"bogus"}).code, 1);
    EXPECT_EQ(run({"simulate", "--config", (dir_ / "missing.yaml").string()}).code, 1);
    EXPECT_EQ(run({"simulate", "--trials", "0"}).code, 1);

    auto args = common("simulate", "x");
    args.insert(args.end(), {"--methods", "kriging"});
    const Result r = run(args);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("kriging"), std::string::npos);

    const fs::path bad = dir_ / "bad.yaml";
    std::ofstream(bad) << "rate:\n  p_out: 1.5\n";
    const Result b = run({"simulate", "--config", bad.string(), "--out-dir", (dir_ / "y").string()});
    EXPECT_EQ(b.code, 1);
    EXPECT_NE(b.err.find("p_out"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "y"));

    auto margins = common("rate-cdf", "z");
    margins.insert(margins.end(), {"--margins", "pure_gp"});
    EXPECT_EQ(run(margins).code, 1);
}

TEST_F(Cli, UnreachableMarginTargetIsReported) {
    const fs::path loose = dir_ / "loose.yaml";
    std::ofstream(loose) << "n_sensors: 25\nn_test_points: 4\nn_trials: 12\nrate: {p_out: 0.3}\n";
    const Result r = run({"sweep-margin", "--config", loose.string(), "--out-dir", (dir_ / "u").string(),
                          "--sigma-x-grid", "10", "--target", "0", "--high", "0.05"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("widen the bracket"), std::string::npos);
}

}  // namespace
}  // namespace nigprate
