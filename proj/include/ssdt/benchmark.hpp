#pragma once
// Corpus benchmarking: for every image x configuration pair, retune one weight
// to hit a target structure-to-texture ratio, decompose, and tabulate
// iterations, STR, and correlation measures. Failures (for example an
// unreachable STR target) mark their row and the run continues.
//
// Config file format, line oriented, '#' starts a comment:
//   target_str = 19.23        required, dB
//   tune = alpha              lambda | alpha | beta | gamma, default alpha
//   timing = on               off zeroes wall_time_s for reproducible output
//   [name]                    one block per configuration
//   model = l1                l1 | l2 | gp | hinv
//   lambda = 0.005            remaining keys as in DecomposeConfig
#include <atomic>
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "decompose.hpp"
#include "image.hpp"
#include "metrics.hpp"

namespace ssdt {

struct BenchmarkConfigEntry {
    std::string name;
    DecomposeConfig config;
};

struct BenchmarkSpec {
    double target_str = 0.0;
    TunableWeight tune = TunableWeight::Alpha;
    bool timing = true;
    std::vector<BenchmarkConfigEntry> configs;
};

struct BenchmarkRow {
    std::string image;
    std::string config_name;
    DecomposeConfig config; // tuned weights when ok, the base config when not
    int iterations = 0;
    bool converged = false;
    double str_db = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double wall_time_s = 0.0;
    bool ok = false;
    std::string error;
};

struct BenchmarkAggregate {
    std::string config_name;
    int n_ok = 0;
    int n_failed = 0;
    double mean_str_db = 0.0;
    double mean_c0 = 0.0;
    double mean_c1 = 0.0;
    double mean_iterations = 0.0;
    double mean_wall_time_s = 0.0;
};

struct BenchmarkReport {
    double target_str = 0.0;
    TunableWeight tune = TunableWeight::Alpha;
    std::vector<BenchmarkRow> rows;
    std::vector<BenchmarkAggregate> aggregates;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw FormatError("benchmark config: bad numeric value '" + v +
                          "' for key '" + key + "'");
    }
}

inline int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        int i = std::stoi(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw FormatError("benchmark config: bad integer value '" + v +
                          "' for key '" + key + "'");
    }
}

inline bool parse_switch(const std::string& v, const std::string& key) {
    if (v == "on" || v == "true" || v == "1")
        return true;
    if (v == "off" || v == "false" || v == "0")
        return false;
    throw FormatError("benchmark config: bad on/off value '" + v +
                      "' for key '" + key + "'");
}

inline void apply_config_key(DecomposeConfig& cfg, const std::string& key,
                             const std::string& value) {
    if (key == "model")
        cfg.model = parse_model(value);
    else if (key == "lambda")
        cfg.lambda = parse_double(value, key);
    else if (key == "alpha")
        cfg.alpha = parse_double(value, key);
    else if (key == "beta")
        cfg.beta = parse_double(value, key);
    else if (key == "gamma")
        cfg.gamma = parse_double(value, key);
    else if (key == "p")
        cfg.p = parse_int(value, key);
    else if (key == "order")
        cfg.order = parse_int(value, key);
    else if (key == "rho1")
        cfg.rho1 = parse_double(value, key);
    else if (key == "rho2")
        cfg.rho2 = parse_double(value, key);
    else if (key == "rho3")
        cfg.rho3 = parse_double(value, key);
    else if (key == "eps")
        cfg.eps = parse_double(value, key);
    else if (key == "max_iters")
        cfg.max_iters = parse_int(value, key);
    else if (key == "hard_shrink")
        cfg.hard_shrink_mode = parse_hard_shrink_mode(value);
    else
        throw FormatError("benchmark config: unknown key '" + key + "'");
}

} // namespace detail

/** Parse the benchmark config text. Throws FormatError on syntax problems and
 *  ParameterError when a configuration fails validation. */
inline BenchmarkSpec parse_benchmark_spec(const std::string& text) {
    BenchmarkSpec spec;
    bool have_target = false;
    bool in_section = false;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = text.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw FormatError("benchmark config: unterminated section '" +
                                  line + "'");
            std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name.empty())
                throw FormatError("benchmark config: empty section name");
            spec.configs.push_back({name, DecomposeConfig{}});
            in_section = true;
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("benchmark config: expected key = value, got '" +
                              line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw FormatError("benchmark config: expected key = value, got '" +
                              line + "'");
        if (!in_section) {
            if (key == "target_str") {
                spec.target_str = detail::parse_double(value, key);
                have_target = true;
            } else if (key == "tune") {
                spec.tune = parse_tunable_weight(value);
            } else if (key == "timing") {
                spec.timing = detail::parse_switch(value, key);
            } else {
                throw FormatError("benchmark config: unknown global key '" +
                                  key + "'");
            }
        } else {
            detail::apply_config_key(spec.configs.back().config, key, value);
        }
    }
    if (!have_target)
        throw FormatError("benchmark config: missing target_str");
    if (spec.configs.empty())
        throw FormatError("benchmark config: no configuration sections");
    for (const BenchmarkConfigEntry& e : spec.configs)
        validate_config(e.config);
    return spec;
}

/** Run every image x configuration pair: match_str toward spec.target_str,
 *  decompose at the tuned config, and measure. threads > 1 distributes rows
 *  across workers; row order stays fixed regardless. */
inline BenchmarkReport
run_benchmark(const std::vector<std::pair<std::string, ChannelImage>>& images,
              const BenchmarkSpec& spec, int threads = 1) {
    if (images.empty())
        throw ParameterError("benchmark: corpus is empty");
    if (spec.configs.empty())
        throw ParameterError("benchmark: no configurations");
    if (threads < 1)
        throw ParameterError("benchmark: threads must be at least 1");

    BenchmarkReport report;
    report.target_str = spec.target_str;
    report.tune = spec.tune;
    std::size_t nc = spec.configs.size();
    report.rows.resize(images.size() * nc);

    auto run_row = [&](std::size_t task) {
        std::size_t i = task / nc, j = task % nc;
        BenchmarkRow& row = report.rows[task];
        row.image = images[i].first;
        row.config_name = spec.configs[j].name;
        row.config = spec.configs[j].config;
        auto begin = std::chrono::steady_clock::now();
        try {
            DecomposeConfig tuned = match_str(images[i].second, spec.target_str,
                                              spec.configs[j].config, spec.tune);
            DecompositionResult r = decompose(images[i].second, tuned);
            row.config = tuned;
            row.iterations = r.iterations;
            row.converged = r.converged;
            row.str_db = str_db(r.structure, r.texture);
            CorrelationPair cp =
                structure_texture_correlations(r.structure, r.texture);
            row.c0 = cp.c0;
            row.c1 = cp.c1;
            row.ok = true;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
        if (spec.timing) {
            std::chrono::duration<double> dt =
                std::chrono::steady_clock::now() - begin;
            row.wall_time_s = dt.count();
        }
    };

    std::size_t total = report.rows.size();
    std::size_t workers = std::min<std::size_t>(threads, total);
    if (workers <= 1) {
        for (std::size_t t = 0; t < total; ++t)
            run_row(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < total;
                     t = next.fetch_add(1))
                    run_row(t);
            });
        for (std::thread& th : pool)
            th.join();
    }

    for (std::size_t j = 0; j < nc; ++j) {
        BenchmarkAggregate agg;
        agg.config_name = spec.configs[j].name;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const BenchmarkRow& row = report.rows[i * nc + j];
            if (!row.ok) {
                ++agg.n_failed;
                continue;
            }
            ++agg.n_ok;
            agg.mean_str_db += row.str_db;
            agg.mean_c0 += row.c0;
            agg.mean_c1 += row.c1;
            agg.mean_iterations += row.iterations;
            agg.mean_wall_time_s += row.wall_time_s;
        }
        if (agg.n_ok > 0) {
            agg.mean_str_db /= agg.n_ok;
            agg.mean_c0 /= agg.n_ok;
            agg.mean_c1 /= agg.n_ok;
            agg.mean_iterations /= agg.n_ok;
            agg.mean_wall_time_s /= agg.n_ok;
        }
        report.aggregates.push_back(agg);
    }
    return report;
}

inline nlohmann::json config_to_json(const DecomposeConfig& cfg) {
    nlohmann::json j{{"model", model_name(cfg.model)},
                     {"lambda", cfg.lambda},
                     {"alpha", cfg.alpha},
                     {"beta", cfg.beta},
                     {"order", cfg.order},
                     {"rho1", cfg.rho1},
                     {"rho2", cfg.rho2},
                     {"rho3", cfg.rho3},
                     {"eps", cfg.eps},
                     {"max_iters", cfg.max_iters},
                     {"hard_shrink", hard_shrink_mode_name(cfg.hard_shrink_mode)}};
    if (cfg.gamma)
        j["gamma"] = *cfg.gamma;
    if (cfg.p)
        j["p"] = *cfg.p;
    return j;
}

namespace detail {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/** CSV table, one row per image x configuration, header included. Numeric
 *  fields use %.17g so rows reproduce the computed values exactly. */
inline std::string benchmark_csv(const BenchmarkReport& report) {
    std::string out = "image,config,model,lambda,alpha,beta,gamma,p,order,"
                      "iterations,converged,str_db,c0,c1,wall_time_s,status\n";
    for (const BenchmarkRow& row : report.rows) {
        const DecomposeConfig& c = row.config;
        out += row.image;
        out += ',';
        out += row.config_name;
        out += ',';
        out += model_name(c.model);
        out += ',';
        out += detail::format_g17(c.lambda);
        out += ',';
        out += detail::format_g17(c.alpha);
        out += ',';
        out += detail::format_g17(c.beta);
        out += ',';
        if (c.gamma)
            out += detail::format_g17(*c.gamma);
        out += ',';
        if (c.p)
            out += std::to_string(*c.p);
        out += ',';
        out += std::to_string(c.order);
        out += ',';
        if (row.ok) {
            out += std::to_string(row.iterations);
            out += ',';
            out += row.converged ? "true" : "false";
            out += ',';
            out += detail::format_g17(row.str_db);
            out += ',';
            out += detail::format_g17(row.c0);
            out += ',';
            out += detail::format_g17(row.c1);
        } else {
            out += ",,,,";
        }
        out += ',';
        out += detail::format_g17(row.wall_time_s);
        out += ',';
        out += row.ok ? "ok" : "failed";
        out += '\n';
    }
    return out;
}

/** JSON report: rows plus per-configuration aggregates over the ok rows. */
inline std::string benchmark_json(const BenchmarkReport& report) {
    nlohmann::json j;
    j["target_str"] = report.target_str;
    j["tune"] = tunable_weight_name(report.tune);
    nlohmann::json rows = nlohmann::json::array();
    for (const BenchmarkRow& row : report.rows) {
        nlohmann::json r{{"image", row.image},
                         {"config", row.config_name},
                         {"status", row.ok ? "ok" : "failed"},
                         {"weights", config_to_json(row.config)},
                         {"wall_time_s", row.wall_time_s}};
        if (row.ok) {
            r["iterations"] = row.iterations;
            r["converged"] = row.converged;
            r["str_db"] = row.str_db;
            r["c0"] = row.c0;
            r["c1"] = row.c1;
        } else {
            r["error"] = row.error;
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    nlohmann::json aggs = nlohmann::json::array();
    for (const BenchmarkAggregate& agg : report.aggregates) {
        aggs.push_back(nlohmann::json{{"config", agg.config_name},
                                      {"n_ok", agg.n_ok},
                                      {"n_failed", agg.n_failed},
                                      {"mean_str_db", agg.mean_str_db},
                                      {"mean_c0", agg.mean_c0},
                                      {"mean_c1", agg.mean_c1},
                                      {"mean_iterations", agg.mean_iterations},
                                      {"mean_wall_time_s", agg.mean_wall_time_s}});
    }
    j["aggregates"] = std::move(aggs);
    return j.dump(2) + "\n";
}

} // namespace ssdt
