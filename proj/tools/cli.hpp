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

#pragma once

// Command-line front end: subcommands, output files and the run manifest.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
// (aborted trials above threshold or an unrecoverable factorization).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "nigprate/io.hpp"
#include "nigprate/nigprate.hpp"
#include "selftest.hpp"

namespace nigprate::tools {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream o;
    for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return o.str();
}

/// Collects output files, then writes them plus config.yaml and manifest.json.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }

    void write(const std::string& command, const SimConfig& cfg, double seconds, std::size_t aborted,
               const nlohmann::json& parameters) {
        std::filesystem::create_directories(dir_);
        add("config.yaml", serialize_config(cfg));
        nlohmann::json manifest;
        manifest["tool"] = "nigprate";
        manifest["version"] = kToolVersion;
        manifest["command"] = command;
        manifest["master_seed"] = cfg.master_seed;
        manifest["config"] = serialize_config(cfg);
        manifest["parameters"] = parameters;
        manifest["aborted_trials"] = aborted;
        manifest["variance_clamp_warnings"] = variance_clamp_warnings();
        manifest["wall_clock_seconds"] = seconds;
        nlohmann::json sums = nlohmann::json::object();
        for (const auto& [name, content] : files_) {
            std::ofstream(dir_ / name, std::ios::binary) << content;
            sums[name] = sha256_hex(content);
        }
        manifest["outputs"] = sums;
        std::ofstream(dir_ / "manifest.json") << manifest.dump(2) << '\n';
    }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> files_;
};

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string methods;
    std::string out_dir = "out";
    unsigned threads = 1;
};

inline void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "YAML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed (overrides config)");
    sub->add_option("--trials", o.trials, "Number of trials (overrides config)")->check(CLI::PositiveNumber);
    sub->add_option("--methods", o.methods, "Comma-separated subset of pure_gp,nigp1,nigp2,path_loss");
    sub->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (affects speed only)")->capture_default_str();
}

inline SimConfig resolve_config(const CommonOptions& o) {
    SimConfig cfg = o.config_path.empty() ? parse_config_text("") : parse_config(o.config_path);
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.trials) cfg.n_trials = *o.trials;
    if (!o.methods.empty()) {
        cfg.methods.clear();
        std::stringstream ss(o.methods);
        for (std::string item; std::getline(ss, item, ',');) {
            const auto m = parse_method(item);
            if (!m) throw ConfigError("--methods: unknown method '" + item + "'");
            cfg.methods.push_back(*m);
        }
    }
    validate(cfg);
    return cfg;
}

inline std::map<Method, double> parse_margins(const std::string& text) {
    std::map<Method, double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--margins: expected method=value, got '" + item + "'");
        const auto m = parse_method(item.substr(0, eq));
        if (!m) throw ConfigError("--margins: unknown method '" + item.substr(0, eq) + "'");
        out[*m] = parse_number_list(item.substr(eq + 1), "--margins").front();
    }
    return out;
}

inline bool is_gp(Method m) { return m != Method::PathLoss; }

inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Radio-map predictive rate selection under location uncertainty"};
    app.require_subcommand(1);
    CommonOptions common;

    auto* simulate = app.add_subcommand("simulate", "Run trials at the configured noise level");
    auto* sweep = app.add_subcommand("sweep-sigma-x", "Outage versus location-noise level");
    auto* margin = app.add_subcommand("sweep-margin", "Required margin per method and outage-versus-margin curves");
    auto* cdf = app.add_subcommand("rate-cdf", "Received-rate distribution with calibrated margins");
    auto* demo = app.add_subcommand("demo-1d", "One-dimensional prediction profile");
    auto* selftest = app.add_subcommand("selftest", "Run the embedded invariant checks");
    for (auto* s : {simulate, sweep, margin, cdf, demo}) add_common(s, common);

    std::string sweep_grid = "0,5,10,15,20";
    sweep->add_option("--grid", sweep_grid, "Comma-separated sigma_x values")->capture_default_str();

    std::string margin_sigma = "10,20";
    std::optional<double> margin_target;
    double margin_low = 0.0;
    double margin_high = 3.0;
    double curve_max = 1.0;
    double curve_step = 0.02;
    margin->add_option("--sigma-x-grid", margin_sigma, "Comma-separated sigma_x values")->capture_default_str();
    margin->add_option("--target", margin_target, "Target outage (default: rate.p_out)");
    margin->add_option("--low", margin_low, "Lower bracket (dB)")->capture_default_str();
    margin->add_option("--high", margin_high, "Upper bracket (dB)")->capture_default_str();
    margin->add_option("--curve-max", curve_max, "Largest margin on the outage curve (dB)")->capture_default_str();
    margin->add_option("--curve-step", curve_step, "Margin step on the outage curve (dB)")->capture_default_str();

    double cdf_sigma = 10.0;
    std::string cdf_margins;
    double cdf_step = 0.05;
    double cdf_high = 3.0;
    cdf->add_option("--sigma-x", cdf_sigma, "Location-noise level")->capture_default_str();
    cdf->add_option("--margins", cdf_margins, "Fixed margins, e.g. pure_gp=0.28,nigp2=0.12 (default: calibrate)");
    cdf->add_option("--rate-step", cdf_step, "CDF grid spacing (bps/Hz)")->capture_default_str();
    cdf->add_option("--high", cdf_high, "Upper bracket for margin calibration (dB)")->capture_default_str();

    double demo_sigma = 10.0;
    demo->add_option("--sigma-x", demo_sigma, "Location-noise level")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (selftest->parsed()) {
            return run_selftest(out) ? 0 : 2;
        }

        const SimConfig cfg = resolve_config(common);
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
        OutputDir dir(common.out_dir);
        nlohmann::json params = nlohmann::json::object();
        std::size_t aborted = 0;

        if (simulate->parsed()) {
            const Batch batch = run_batch(cfg, common.threads);
            check_aborts(batch, cfg.n_trials);
            aborted = batch.aborted.size();
            const auto records = to_records(batch.outcomes, cfg.channel.n0, cfg.rate_cfg);
            std::vector<SweepRow> rows;
            for (const auto& e : estimate_outage(records)) rows.push_back({cfg.noise.sigma_x, e});
            dir.add("outage.csv", sweep_csv(rows));
            dir.add("records.csv", records_csv(records));
            dir.write("simulate", cfg, elapsed(), aborted, params);
        } else if (sweep->parsed()) {
            const auto grid = parse_number_list(sweep_grid, "--grid");
            const auto rows = sweep_sigma_x(cfg, grid, common.threads, &aborted);
            dir.add("sweep_sigma_x.csv", sweep_csv(rows));
            params["grid"] = grid;
            dir.write("sweep-sigma-x", cfg, elapsed(), aborted, params);
        } else if (margin->parsed()) {
            const auto grid = parse_number_list(margin_sigma, "--sigma-x-grid");
            const double target = margin_target.value_or(cfg.rate_cfg.p_out);
            std::vector<MarginRow> rows;
            std::vector<MarginCurveRow> curve;
            const auto steps = static_cast<int>(std::floor(curve_max / curve_step + 1e-9));
            for (double sx : grid) {
                SimConfig c = cfg;
                c.noise.sigma_x = sx;
                const Batch batch = run_batch(c, common.threads);
                check_aborts(batch, c.n_trials);
                aborted += batch.aborted.size();
                for (Method m : kAllMethods) {
                    if (std::find(c.methods.begin(), c.methods.end(), m) == c.methods.end()) continue;
                    const double star = find_required_margin(batch.outcomes, m, c.channel.n0, c.rate_cfg.p_out, target,
                                                             margin_low, margin_high);
                    rows.push_back({m, sx, star, target});
                    for (int i = 0; i <= steps; ++i) {
                        const double sd = curve_step * i;
                        curve.push_back({sx, sd, estimate_outage(batch.outcomes, m, c.channel.n0,
                                                                 RateConfig{c.rate_cfg.p_out, sd})});
                    }
                }
            }
            dir.add("sweep_margin.csv", margin_csv(rows));
            dir.add("margin_curve.csv", margin_curve_csv(curve));
            params["sigma_x_grid"] = grid;
            params["target"] = target;
            params["bracket"] = {margin_low, margin_high};
            dir.write("sweep-margin", cfg, elapsed(), aborted, params);
        } else if (cdf->parsed()) {
            SimConfig c = cfg;
            c.noise.sigma_x = cdf_sigma;
            const Batch batch = run_batch(c, common.threads);
            check_aborts(batch, c.n_trials);
            aborted = batch.aborted.size();
            MarginMap margins = parse_margins(cdf_margins);
            for (Method m : c.methods) {
                if (!is_gp(m) || margins.contains(m)) continue;
                margins[m] = find_required_margin(batch.outcomes, m, c.channel.n0, c.rate_cfg.p_out, c.rate_cfg.p_out,
                                                  0.0, cdf_high);
            }
            const auto records = to_records(batch.outcomes, c.channel.n0, c.rate_cfg, margins);
            double top = 0.0;
            for (const auto& r : records) top = std::max(top, r.received_rate);
            std::vector<double> grid;
            const auto n = static_cast<long>(std::ceil(top / cdf_step));
            for (long i = 0; i <= n; ++i) grid.push_back(cdf_step * static_cast<double>(i));
            dir.add("rate_cdf.csv", cdf_csv(rate_cdf(records, grid)));
            params["sigma_x"] = cdf_sigma;
            for (const auto& [m, v] : margins) params["margins"][std::string(method_name(m))] = v;
            dir.write("rate-cdf", c, elapsed(), aborted, params);
        } else if (demo->parsed()) {
            SimConfig c = cfg;
            c.noise.sigma_x = demo_sigma;
            dir.add("demo_1d.csv", profile_csv(demo_1d(c)));
            params["sigma_x"] = demo_sigma;
            dir.write("demo-1d", c, elapsed(), aborted, params);
        }
        out << "wrote outputs to " << common.out_dir << '\n';
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace nigprate::tools
