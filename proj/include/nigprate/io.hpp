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

// YAML configuration and CSV serialization. Floating-point values are always
// written in their shortest round-trip form so outputs are byte-stable.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "nigprate/errors.hpp"
#include "nigprate/montecarlo.hpp"
#include "nigprate/types.hpp"

namespace nigprate {

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf.data(), ptr};
}

namespace detail {

inline void reject_unknown(const YAML::Node& node, std::string_view section,
                           std::initializer_list<std::string_view> allowed) {
    if (!node.IsMap()) throw ConfigError(std::string(section.empty() ? "config" : section) + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) {
            throw ConfigError("unknown config key '" + (section.empty() ? key : std::string(section) + "." + key) + "'");
        }
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, std::string_view section, T& out) {
    const YAML::Node v = node[key];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config key '" + (section.empty() ? std::string(key) : std::string(section) + "." + key) +
                          "' has an invalid value");
    }
}

inline Point2 read_point(const YAML::Node& node, const std::string& name) {
    if (!node.IsSequence() || node.size() != 2) throw ConfigError(name + " must be a two-element list [x1, x2]");
    try {
        return {node[0].as<double>(), node[1].as<double>()};
    } catch (const YAML::Exception&) {
        throw ConfigError(name + " must contain numbers");
    }
}

}  // namespace detail

/// Parses YAML text into a SimConfig. Missing keys keep their defaults.
/// Kernel hyperparameters default to the values matched to the channel.
inline SimConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    SimConfig cfg;
    if (!root || root.IsNull()) {
        validate(cfg);
        return cfg;
    }
    detail::reject_unknown(root, "",
                           {"area_side", "n_sensors", "n_test_points", "n_trials", "master_seed", "methods",
                            "demo_grid_points", "channel", "kernel", "noise", "rate", "nigp"});
    detail::read(root, "area_side", "", cfg.area_side);
    detail::read(root, "n_sensors", "", cfg.n_sensors);
    detail::read(root, "n_test_points", "", cfg.n_test_points);
    detail::read(root, "n_trials", "", cfg.n_trials);
    detail::read(root, "master_seed", "", cfg.master_seed);
    detail::read(root, "demo_grid_points", "", cfg.demo_grid_points);
    if (const auto methods = root["methods"]) {
        if (!methods.IsSequence()) throw ConfigError("methods must be a list");
        cfg.methods.clear();
        for (const auto& m : methods) {
            const auto parsed = parse_method(m.as<std::string>());
            if (!parsed) throw ConfigError("methods: unknown method '" + m.as<std::string>() + "'");
            cfg.methods.push_back(*parsed);
        }
    }
    if (const auto ch = root["channel"]) {
        detail::reject_unknown(ch, "channel", {"p_tx", "x_tx", "eta", "sigma_db", "d_cor", "n0"});
        detail::read(ch, "p_tx", "channel", cfg.channel.p_tx);
        if (ch["x_tx"]) cfg.channel.x_tx = detail::read_point(ch["x_tx"], "channel.x_tx");
        detail::read(ch, "eta", "channel", cfg.channel.eta);
        detail::read(ch, "sigma_db", "channel", cfg.channel.sigma_db);
        detail::read(ch, "d_cor", "channel", cfg.channel.d_cor);
        detail::read(ch, "n0", "channel", cfg.channel.n0);
    }
    cfg.hyper = KernelHyper::matched(cfg.channel);
    if (const auto k = root["kernel"]) {
        detail::reject_unknown(k, "kernel", {"sigma_k", "ell", "d_c"});
        detail::read(k, "sigma_k", "kernel", cfg.hyper.sigma_k);
        detail::read(k, "ell", "kernel", cfg.hyper.ell);
        detail::read(k, "d_c", "kernel", cfg.hyper.d_c);
    }
    if (const auto n = root["noise"]) {
        detail::reject_unknown(n, "noise", {"sigma_x", "sigma_y", "sigma_x_is_variance"});
        detail::read(n, "sigma_x", "noise", cfg.noise.sigma_x);
        detail::read(n, "sigma_y", "noise", cfg.noise.sigma_y);
        detail::read(n, "sigma_x_is_variance", "noise", cfg.noise.sigma_x_is_variance);
    }
    if (const auto r = root["rate"]) {
        detail::reject_unknown(r, "rate", {"p_out", "sigma_delta"});
        detail::read(r, "p_out", "rate", cfg.rate_cfg.p_out);
        detail::read(r, "sigma_delta", "rate", cfg.rate_cfg.sigma_delta);
    }
    if (const auto g = root["nigp"]) {
        detail::reject_unknown(g, "nigp",
                               {"correction_passes", "include_mean_hessian", "second_order_mean_shift", "derivative_d_c"});
        detail::read(g, "correction_passes", "nigp", cfg.nigp.correction_passes);
        detail::read(g, "include_mean_hessian", "nigp", cfg.nigp.include_mean_hessian);
        detail::read(g, "second_order_mean_shift", "nigp", cfg.nigp.second_order_mean_shift);
        detail::read(g, "derivative_d_c", "nigp", cfg.nigp.derivative_d_c);
    }
    validate(cfg);
    return cfg;
}

inline SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Fully explicit YAML rendering; parse_config_text(serialize_config(c)) == c.
inline std::string serialize_config(const SimConfig& cfg) {
    const auto d = [](double v) { return format_double(v); };
    const auto b = [](bool v) { return v ? "true" : "false"; };
    std::ostringstream o;
    o << "area_side: " << d(cfg.area_side) << "\n"
      << "n_sensors: " << cfg.n_sensors << "\n"
      << "n_test_points: " << cfg.n_test_points << "\n"
      << "n_trials: " << cfg.n_trials << "\n"
      << "master_seed: " << cfg.master_seed << "\n"
      << "demo_grid_points: " << cfg.demo_grid_points << "\n"
      << "methods: [";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) o << (i ? ", " : "") << method_name(cfg.methods[i]);
    o << "]\n"
      << "channel:\n"
      << "  p_tx: " << d(cfg.channel.p_tx) << "\n"
      << "  x_tx: [" << d(cfg.channel.x_tx.x1) << ", " << d(cfg.channel.x_tx.x2) << "]\n"
      << "  eta: " << d(cfg.channel.eta) << "\n"
      << "  sigma_db: " << d(cfg.channel.sigma_db) << "\n"
      << "  d_cor: " << d(cfg.channel.d_cor) << "\n"
      << "  n0: " << d(cfg.channel.n0) << "\n"
      << "kernel:\n"
      << "  sigma_k: " << d(cfg.hyper.sigma_k) << "\n"
      << "  ell: " << d(cfg.hyper.ell) << "\n"
      << "  d_c: " << d(cfg.hyper.d_c) << "\n"
      << "noise:\n"
      << "  sigma_x: " << d(cfg.noise.sigma_x) << "\n"
      << "  sigma_y: " << d(cfg.noise.sigma_y) << "\n"
      << "  sigma_x_is_variance: " << b(cfg.noise.sigma_x_is_variance) << "\n"
      << "rate:\n"
      << "  p_out: " << d(cfg.rate_cfg.p_out) << "\n"
      << "  sigma_delta: " << d(cfg.rate_cfg.sigma_delta) << "\n"
      << "nigp:\n"
      << "  correction_passes: " << cfg.nigp.correction_passes << "\n"
      << "  include_mean_hessian: " << b(cfg.nigp.include_mean_hessian) << "\n"
      << "  second_order_mean_shift: " << b(cfg.nigp.second_order_mean_shift) << "\n"
      << "  derivative_d_c: " << d(cfg.nigp.derivative_d_c) << "\n";
    return o.str();
}

// CSV column contracts.
inline constexpr std::string_view kSweepHeader = "method,sigma_x,outage_prob,ci_low,ci_high,n_samples";
inline constexpr std::string_view kMarginHeader = "method,sigma_x,sigma_delta_star,target_pout";
inline constexpr std::string_view kMarginCurveHeader =
    "method,sigma_x,sigma_delta,outage_prob,ci_low,ci_high,n_samples";
inline constexpr std::string_view kCdfHeader = "method,rate,cum_prob";
inline constexpr std::string_view kProfileHeader = "method,x1,mean,lower,upper,truth";
inline constexpr std::string_view kRecordsHeader =
    "trial,method,x1,x2,predicted_rate,true_capacity,outage,received_rate";

struct MarginRow {
    Method method = Method::PureGP;
    double sigma_x = 0.0;
    double sigma_delta_star = 0.0;
    double target_pout = 0.0;
};

struct MarginCurveRow {
    double sigma_x = 0.0;
    double sigma_delta = 0.0;
    OutageEstimate estimate;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream o;
    o << kSweepHeader << '\n';
    for (const auto& r : rows) {
        o << method_name(r.estimate.method) << ',' << format_double(r.sigma_x) << ','
          << format_double(r.estimate.outage_prob) << ',' << format_double(r.estimate.ci_low) << ','
          << format_double(r.estimate.ci_high) << ',' << r.estimate.n_samples << '\n';
    }
    return o.str();
}

inline std::string margin_csv(const std::vector<MarginRow>& rows) {
    std::ostringstream o;
    o << kMarginHeader << '\n';
    for (const auto& r : rows) {
        o << method_name(r.method) << ',' << format_double(r.sigma_x) << ',' << format_double(r.sigma_delta_star) << ','
          << format_double(r.target_pout) << '\n';
    }
    return o.str();
}

inline std::string margin_curve_csv(const std::vector<MarginCurveRow>& rows) {
    std::ostringstream o;
    o << kMarginCurveHeader << '\n';
    for (const auto& r : rows) {
        o << method_name(r.estimate.method) << ',' << format_double(r.sigma_x) << ',' << format_double(r.sigma_delta)
          << ',' << format_double(r.estimate.outage_prob) << ',' << format_double(r.estimate.ci_low) << ','
          << format_double(r.estimate.ci_high) << ',' << r.estimate.n_samples << '\n';
    }
    return o.str();
}

inline std::string cdf_csv(const std::vector<CdfRow>& rows) {
    std::ostringstream o;
    o << kCdfHeader << '\n';
    for (const auto& r : rows) {
        o << method_name(r.method) << ',' << format_double(r.rate) << ',' << format_double(r.cum_prob) << '\n';
    }
    return o.str();
}

inline std::string profile_csv(const std::vector<ProfileRow>& rows) {
    std::ostringstream o;
    o << kProfileHeader << '\n';
    for (const auto& r : rows) {
        o << method_name(r.method) << ',' << format_double(r.x1) << ',' << format_double(r.mean) << ','
          << format_double(r.lower) << ',' << format_double(r.upper) << ',' << format_double(r.truth) << '\n';
    }
    return o.str();
}

inline std::string records_csv(const std::vector<TrialRecord>& rows) {
    std::ostringstream o;
    o << kRecordsHeader << '\n';
    for (const auto& r : rows) {
        o << r.trial_index << ',' << method_name(r.method) << ',' << format_double(r.test_point.x1) << ','
          << format_double(r.test_point.x2) << ',' << format_double(r.predicted_rate) << ','
          << format_double(r.true_capacity) << ',' << (r.outage ? 1 : 0) << ',' << format_double(r.received_rate)
          << '\n';
    }
    return o.str();
}

/// Comma-separated numbers, e.g. "0,5,10".
inline std::vector<double> parse_number_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(',', pos), text.size());
        std::string item(text.substr(pos, end - pos));
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
        }
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

}  // namespace nigprate
