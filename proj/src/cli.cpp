#include "specflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>
#include <vector>

#include "specflow/errors.hpp"
#include "specflow/models.hpp"
#include "specflow/serialize.hpp"

namespace specflow {

namespace {

using nlohmann::json;

/// Config validation failure; the message names the offending field.
struct ConfigError : Error {
    explicit ConfigError(const std::string& field, const std::string& why)
        : Error("config error: field '" + field + "': " + why) {}
};

// ---------------------------------------------------------------------------
// Config model

struct ChiSpec {
    std::string family;  // chi_p | chi_theta | involutive
    double p = 2.0;
    double s = 1.0;
    double delta = 0.25;
};

struct PsiSpec {
    std::string family;  // cauchy | gaussian | chi_prime
    double s = 1.0;
};

struct ScenarioSpec {
    std::string generator;
    std::uint64_t seed = 1;
    int dim = 4;
    int degree = 2;
    int N = 16;
    Interval window{0.5, 1.5};
    std::vector<std::pair<double, int>> crossings;
    Eigen::MatrixXcd proj_p, proj_q;  // for the segment generator
    std::shared_ptr<ScenarioSpec> base;  // for the conjugated generator
    double scale = 1.0;
};

struct RunConfig {
    ScenarioSpec scenario;
    std::vector<std::string> methods;
    std::optional<ChiSpec> chi;
    std::optional<PsiSpec> psi;
    double quad_tol = 1e-8;
    double gap_tol = 1e-8;
    double winding_stop = 1e-6;
    int winding_points = 32;
    int winding_max_points = 16384;
    bool winding_refine = true;
    std::string format = "json";
    int plot_samples = 201;
    std::optional<std::string> sweep_parameter;
    std::vector<json> sweep_values;
};

double require_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number()) {
        throw ConfigError(field, "expected a number");
    }
    return j[field].get<double>();
}

Eigen::MatrixXcd parse_matrix(const json& j, const std::string& field) {
    try {
        return matrix_from_json(j.dump());
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

ScenarioSpec parse_scenario(const json& j, const std::string& prefix) {
    if (!j.is_object()) throw ConfigError(prefix, "expected an object");
    ScenarioSpec s;
    if (!j.contains("generator") || !j["generator"].is_string()) {
        throw ConfigError(prefix + ".generator", "expected a string");
    }
    s.generator = j["generator"].get<std::string>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    const json params = j.value("params", json::object());

    if (s.generator == "random") {
        if (params.contains("dim")) s.dim = static_cast<int>(require_number(params, "dim"));
        if (params.contains("degree")) s.degree = static_cast<int>(require_number(params, "degree"));
    } else if (s.generator == "crossing_path") {
        if (!params.contains("crossings") || !params["crossings"].is_array()) {
            throw ConfigError(prefix + ".params.crossings", "expected an array of [t, direction]");
        }
        for (const json& c : params["crossings"]) {
            if (!c.is_array() || c.size() != 2) {
                throw ConfigError(prefix + ".params.crossings", "entries must be [t, direction]");
            }
            s.crossings.emplace_back(c[0].get<double>(), c[1].get<int>());
        }
    } else if (s.generator == "circle_dirac" || s.generator == "theta_model") {
        if (params.contains("N")) s.N = static_cast<int>(require_number(params, "N"));
        if (params.contains("window")) {
            const json& w = params["window"];
            if (!w.is_array() || w.size() != 2) {
                throw ConfigError(prefix + ".params.window", "expected [a, b]");
            }
            s.window = {w[0].get<double>(), w[1].get<double>()};
        } else if (s.generator == "theta_model") {
            s.window = {0.1, 0.9};
        }
    } else if (s.generator == "segment") {
        if (!params.contains("P") || !params.contains("Q")) {
            throw ConfigError(prefix + ".params", "segment requires projection matrices P and Q");
        }
        s.proj_p = parse_matrix(params["P"], prefix + ".params.P");
        s.proj_q = parse_matrix(params["Q"], prefix + ".params.Q");
    } else if (s.generator == "conjugated") {
        if (!params.contains("base")) {
            throw ConfigError(prefix + ".params.base", "conjugated requires a base scenario");
        }
        s.base = std::make_shared<ScenarioSpec>(
            parse_scenario(params["base"], prefix + ".params.base"));
        if (params.contains("scale")) s.scale = require_number(params, "scale");
    } else {
        throw ConfigError(prefix + ".generator", "unknown generator '" + s.generator + "'");
    }
    return s;
}

ChiSpec parse_chi(const json& j, const std::string& prefix) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
        throw ConfigError(prefix + ".family", "expected a string");
    }
    ChiSpec c;
    c.family = j["family"].get<std::string>();
    if (c.family == "chi_p") {
        c.p = j.contains("p") ? require_number(j, "p") : 2.0;
        if (!(c.p >= 1.0)) throw ConfigError(prefix + ".p", "requires p >= 1");
    } else if (c.family == "chi_theta") {
        c.s = j.contains("s") ? require_number(j, "s") : 1.0;
        if (!(c.s > 0.0)) throw ConfigError(prefix + ".s", "requires s > 0");
    } else if (c.family == "involutive") {
        c.delta = j.contains("delta") ? require_number(j, "delta") : 0.25;
        if (!(c.delta > 0.0)) throw ConfigError(prefix + ".delta", "requires delta > 0");
    } else {
        throw ConfigError(prefix + ".family", "unknown family '" + c.family + "'");
    }
    return c;
}

PsiSpec parse_psi(const json& j, const std::string& prefix) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
        throw ConfigError(prefix + ".family", "expected a string");
    }
    PsiSpec p;
    p.family = j["family"].get<std::string>();
    if (p.family == "gaussian") {
        p.s = j.contains("s") ? require_number(j, "s") : 1.0;
        if (!(p.s > 0.0)) throw ConfigError(prefix + ".s", "requires s > 0");
    } else if (p.family != "cauchy" && p.family != "chi_prime") {
        throw ConfigError(prefix + ".family", "unknown family '" + p.family + "'");
    }
    return p;
}

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    if (!j.contains("scenario")) throw ConfigError("scenario", "missing");
    cfg.scenario = parse_scenario(j["scenario"], "scenario");

    if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty()) {
        throw ConfigError("methods", "expected a non-empty array");
    }
    for (const json& m : j["methods"]) {
        const std::string name = m.get<std::string>();
        if (name != "crossings" && name != "winding" && name != "integral"
            && name != "corollary") {
            throw ConfigError("methods", "unknown method '" + name + "'");
        }
        cfg.methods.push_back(name);
    }

    if (j.contains("chi")) cfg.chi = parse_chi(j["chi"], "chi");
    if (j.contains("psi")) cfg.psi = parse_psi(j["psi"], "psi");

    const bool needs_chi =
        std::find(cfg.methods.begin(), cfg.methods.end(), "integral") != cfg.methods.end()
        || std::find(cfg.methods.begin(), cfg.methods.end(), "winding") != cfg.methods.end();
    if (needs_chi && !cfg.chi) {
        throw ConfigError("chi", "required when the integral or winding method is selected");
    }
    const bool needs_psi =
        std::find(cfg.methods.begin(), cfg.methods.end(), "corollary") != cfg.methods.end();
    if (needs_psi && !cfg.psi) {
        throw ConfigError("psi", "required when the corollary method is selected");
    }
    if (cfg.psi && cfg.psi->family == "chi_prime" && !cfg.chi) {
        throw ConfigError("psi.family", "chi_prime requires a chi spec");
    }

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (t.contains("quadrature")) cfg.quad_tol = require_number(t, "quadrature");
        if (t.contains("gap")) cfg.gap_tol = require_number(t, "gap");
        if (t.contains("winding_stop")) cfg.winding_stop = require_number(t, "winding_stop");
    }
    if (j.contains("winding")) {
        const json& w = j["winding"];
        if (w.contains("quad_points")) {
            cfg.winding_points = static_cast<int>(require_number(w, "quad_points"));
        }
        if (w.contains("max_quad_points")) {
            cfg.winding_max_points = static_cast<int>(require_number(w, "max_quad_points"));
        }
        if (w.contains("refine")) cfg.winding_refine = w["refine"].get<bool>();
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        if (o.contains("format")) {
            cfg.format = o["format"].get<std::string>();
            if (cfg.format != "json" && cfg.format != "csv") {
                throw ConfigError("output.format", "expected 'json' or 'csv'");
            }
        }
        if (o.contains("samples")) cfg.plot_samples = static_cast<int>(require_number(o, "samples"));
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        if (!s.contains("parameter") || !s["parameter"].is_string()) {
            throw ConfigError("sweep.parameter", "expected a string");
        }
        cfg.sweep_parameter = s["parameter"].get<std::string>();
        if (!s.contains("values") || !s["values"].is_array() || s["values"].empty()) {
            throw ConfigError("sweep.values", "expected a non-empty array");
        }
        for (const json& v : s["values"]) cfg.sweep_values.push_back(v);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Building blocks

Scenario build_scenario(const ScenarioSpec& s) {
    if (s.generator == "random") return make_random_path(s.dim, s.seed, s.degree);
    if (s.generator == "crossing_path") return make_crossing_path(s.crossings);
    if (s.generator == "circle_dirac") return make_circle_dirac(s.N, s.window);
    if (s.generator == "theta_model") return make_theta_model(s.N, s.window);
    if (s.generator == "segment") {
        ProjectionPair pair{Projection(HermitianMatrix(s.proj_p)),
                            Projection(HermitianMatrix(s.proj_q))};
        const long expected = relative_index(pair);
        return {segment_path(pair), expected, "relative index of the projection pair",
                std::nullopt, Summability::finite()};
    }
    if (s.generator == "conjugated") {
        return conjugate_scenario(build_scenario(*s.base), s.seed, s.scale);
    }
    throw ConfigError("scenario.generator", "unknown generator '" + s.generator + "'");
}

NormalizingFunction build_chi(const ChiSpec& c) {
    if (c.family == "chi_p") return make_chi_p(c.p);
    if (c.family == "chi_theta") return make_chi_theta(c.s);
    return make_involutive_spline(c.delta);
}

EvenWeight build_psi(const PsiSpec& p, const std::optional<ChiSpec>& chi_spec) {
    if (p.family == "cauchy") {
        return {"cauchy", [](double x) { return 1.0 / (1.0 + x * x); },
                DecayClass::polynomial(2.0, 1.0)};
    }
    if (p.family == "gaussian") {
        const double s = p.s;
        return {"gaussian", [s](double x) { return std::exp(-s * x * x); },
                DecayClass::gaussian(s, 1.0)};
    }
    // chi_prime
    const NormalizingFunction chi = build_chi(*chi_spec);
    return {chi.label() + "_prime", [chi](double x) { return chi.chi_prime(x); },
            chi.chi_prime_decay()};
}

struct MethodOutcome {
    FlowReport report;
    double runtime_ms = 0.0;
};

MethodOutcome run_method(const std::string& name, const Scenario& scenario,
                         const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    FlowReport report;

    FlowOptions opts;
    opts.gap_tolerance = cfg.gap_tol;
    opts.winding_start_points = cfg.winding_points;
    opts.winding_max_points = cfg.winding_max_points;
    opts.winding_stop_tolerance = cfg.winding_stop;
    opts.winding_refine = cfg.winding_refine;

    if (name == "crossings") {
        CrossingOptions copts;
        copts.gap_tolerance = cfg.gap_tol;
        report = spectral_flow_crossings(scenario.path, copts);
    } else if (name == "winding") {
        const double delta =
            (cfg.chi && cfg.chi->family == "involutive") ? cfg.chi->delta : 0.0;
        report = spectral_flow_via_winding(scenario.path, delta, opts);
    } else if (name == "integral") {
        report = spectral_flow_integral(scenario.path, build_chi(*cfg.chi), cfg.quad_tol, opts);
    } else {
        report = spectral_flow_corollary(scenario.path, build_psi(*cfg.psi, cfg.chi),
                                         cfg.quad_tol, opts);
    }

    const auto stop = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
    return {std::move(report), ms};
}

bool all_agree(const std::vector<MethodOutcome>& outcomes) {
    for (const MethodOutcome& o : outcomes) {
        if (!o.report.ok()) return false;
        if (o.report.integer != outcomes.front().report.integer) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Verbs

int execute_run(const RunConfig& cfg, const CliOptions& options) {
    const Scenario scenario = build_scenario(cfg.scenario);

    std::vector<MethodOutcome> outcomes;
    for (const std::string& m : cfg.methods) {
        outcomes.push_back(run_method(m, scenario, cfg));
        const MethodOutcome& o = outcomes.back();
        std::printf("%-10s value=%s integer=%ld residual=%s%s (%.1f ms)\n", m.c_str(),
                    format_double(o.report.value).c_str(), o.report.integer,
                    format_double(o.report.residual).c_str(),
                    o.report.flagged ? " [flagged]" : "", o.runtime_ms);
    }
    const bool agreement = all_agree(outcomes);
    std::printf("agreement: %s\n", agreement ? "yes" : "NO");

    const std::string format = options.format.empty() ? cfg.format : options.format;
    std::ostringstream out;
    if (format == "json") {
        out << "{\n  \"scenario\": \"" << scenario.path.metadata().label << "\",\n";
        out << "  \"expected_flow\": "
            << (scenario.expected_flow ? std::to_string(*scenario.expected_flow) : "null")
            << ",\n";
        out << "  \"reports\": {\n";
        for (size_t i = 0; i < outcomes.size(); ++i) {
            out << "    \"" << cfg.methods[i] << "\": "
                << flow_report_to_json(outcomes[i].report, 4) << (i + 1 < outcomes.size() ? ",\n" : "\n");
        }
        out << "  },\n";
        out << "  \"agreement\": " << (agreement ? "true" : "false") << "\n}\n";
        write_file_atomic(options.out_dir + "/report.json", out.str());
    } else {
        out << csv_report_header() << "\n";
        for (const MethodOutcome& o : outcomes) out << flow_report_to_csv_row(o.report) << "\n";
        write_file_atomic(options.out_dir + "/report.csv", out.str());
    }
    return agreement ? kExitAgreement : kExitDisagreement;
}

RunConfig patch_for_sweep(const RunConfig& base, const std::string& parameter, const json& value) {
    RunConfig cfg = base;
    if (parameter == "chi") {
        cfg.chi = parse_chi(value, "sweep.values[]");
    } else if (parameter == "quad_points") {
        cfg.winding_points = static_cast<int>(value.get<double>());
        cfg.winding_refine = false;  // fixed point count so the sweep shows convergence
    } else if (parameter == "N") {
        cfg.scenario.N = static_cast<int>(value.get<double>());
    } else if (parameter == "dim") {
        cfg.scenario.dim = static_cast<int>(value.get<double>());
    } else if (parameter == "degree") {
        cfg.scenario.degree = static_cast<int>(value.get<double>());
    } else if (parameter == "seed") {
        cfg.scenario.seed = value.get<std::uint64_t>();
    } else if (parameter == "quadrature") {
        cfg.quad_tol = value.get<double>();
    } else {
        throw ConfigError("sweep.parameter", "unknown parameter '" + parameter + "'");
    }
    return cfg;
}

std::string sweep_value_label(const std::string& parameter, const json& value) {
    if (parameter == "chi") return value["family"].get<std::string>();
    std::ostringstream os;
    os << value;
    return os.str();
}

int execute_sweep(const RunConfig& cfg, const CliOptions& options) {
    if (!cfg.sweep_parameter) throw ConfigError("sweep", "missing sweep spec for the sweep verb");

    const size_t rows = cfg.sweep_values.size();
    std::vector<std::vector<MethodOutcome>> results(rows);
    std::vector<std::string> errors(rows);

    const int threads = std::max(1, options.threads);
    std::vector<std::thread> pool;
    std::atomic<size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= rows) return;
            try {
                const RunConfig row_cfg =
                    patch_for_sweep(cfg, *cfg.sweep_parameter, cfg.sweep_values[i]);
                const Scenario scenario = build_scenario(row_cfg.scenario);
                for (const std::string& m : row_cfg.methods) {
                    results[i].push_back(run_method(m, scenario, row_cfg));
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    for (size_t i = 0; i < rows; ++i) {
        if (!errors[i].empty()) {
            std::cerr << "sweep row " << i << " failed: " << errors[i] << "\n";
            return kExitError;
        }
    }

    std::ostringstream out;
    out << "parameter,value";
    for (const std::string& m : cfg.methods) {
        out << "," << m << "_value," << m << "_integer," << m << "_residual," << m
            << "_runtime_ms";
    }
    out << ",agreement\n";

    bool all_rows_agree = true;
    for (size_t i = 0; i < rows; ++i) {
        const bool agreement = all_agree(results[i]);
        all_rows_agree = all_rows_agree && agreement;
        out << *cfg.sweep_parameter << ","
            << sweep_value_label(*cfg.sweep_parameter, cfg.sweep_values[i]);
        for (const MethodOutcome& o : results[i]) {
            out << "," << format_double(o.report.value) << "," << o.report.integer << ","
                << format_double(o.report.residual) << "," << format_double(o.runtime_ms);
        }
        out << "," << (agreement ? 1 : 0) << "\n";
    }
    write_file_atomic(options.out_dir + "/sweep.csv", out.str());
    std::printf("sweep: %zu rows, %s\n", rows, all_rows_agree ? "all agree" : "DISAGREEMENT");
    return all_rows_agree ? kExitAgreement : kExitDisagreement;
}

int execute_plotdata(const RunConfig& cfg, const CliOptions& options) {
    const Scenario scenario = build_scenario(cfg.scenario);
    const Interval iv = scenario.path.interval();
    const int samples = std::max(2, cfg.plot_samples);

    std::ostringstream out;
    out << "t,branch,eigenvalue\n";
    for (int i = 0; i < samples; ++i) {
        const double t = iv.a + iv.length() * i / (samples - 1);
        const Eigen::VectorXd eigs = eigh(scenario.path.at(t)).eigenvalues;
        for (Eigen::Index k = 0; k < eigs.size(); ++k) {
            out << format_double(t) << "," << k << "," << format_double(eigs[k]) << "\n";
        }
    }
    write_file_atomic(options.out_dir + "/plotdata.csv", out.str());
    std::printf("plotdata: %d samples x %ld branches\n", samples,
                static_cast<long>(scenario.path.dim()));
    return kExitAgreement;
}

}  // namespace

int run_cli(const CliOptions& options) {
    try {
        std::ifstream in(options.config_path);
        if (!in) {
            std::cerr << "cannot open config file '" << options.config_path << "'\n";
            return kExitError;
        }
        json parsed;
        try {
            in >> parsed;
        } catch (const json::parse_error& e) {
            std::cerr << "config parse error: " << e.what() << "\n";
            return kExitError;
        }
        RunConfig cfg = parse_config(parsed);
        if (options.seed_override) cfg.scenario.seed = *options.seed_override;

        std::filesystem::create_directories(options.out_dir);
        if (options.verb == "run") return execute_run(cfg, options);
        if (options.verb == "sweep") return execute_sweep(cfg, options);
        if (options.verb == "plotdata") return execute_plotdata(cfg, options);
        std::cerr << "unknown verb '" << options.verb << "'\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitError;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"spectral flow scenario runner"};
    app.require_subcommand(1);

    CliOptions options;
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", options.config_path, "JSON scenario config")->required();
        sub->add_option("--out", options.out_dir, "output directory (default .)");
        sub->add_option("--format", options.format, "json|csv (overrides the config)");
        sub->add_option("--threads", options.threads, "parallel sweep rows");
        sub->add_option("--seed", seed, "override the scenario seed")
            ->each([&](const std::string&) { seed_given = true; });
    };
    add_common(app.add_subcommand("run", "run every requested method once"));
    add_common(app.add_subcommand("sweep", "run the methods across a parameter sweep"));
    add_common(app.add_subcommand("plotdata", "emit (t, branch, eigenvalue) samples"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitAgreement : kExitError;
    }
    options.verb = app.get_subcommands().front()->get_name();
    if (seed_given) options.seed_override = seed;
    return run_cli(options);
}

}  // namespace specflow
