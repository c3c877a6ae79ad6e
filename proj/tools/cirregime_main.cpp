// Command-line front end: wires model files to the analyses and writes
// machine-readable reports. One JSON document on stdout per command,
// diagnostics on stderr, CSV tables to files. Exit codes: 0 success,
// 1 domain verdict or contract failure, 2 usage or parse failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cirregime/analyze.hpp"
#include "cirregime/classify.hpp"
#include "cirregime/io.hpp"
#include "cirregime/model.hpp"
#include "cirregime/simulate.hpp"
#include "cirregime/spectral.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 42;  // fixed, never time-based

using cirregime::io::json;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw cirregime::ContractError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("CIRREGIME_THREADS")) {
        int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

json make_manifest(const std::string& command, const std::string& model_file,
                   std::uint64_t seed, const json& parameters) {
    return json{{"command", command},
                {"model_file", model_file},
                {"model_hash", cirregime::io::fnv1a_hex(read_file(model_file))},
                {"seed", seed},
                {"parameters", parameters},
                {"version", kVersion}};
}

void write_sidecar_manifest(const std::string& out_path, json manifest, double ms) {
    manifest["duration_ms"] = ms;
    std::ofstream out(out_path + ".manifest.json");
    out << manifest.dump(2) << '\n';
}

void emit(const json& payload) { std::cout << payload.dump(2) << std::endl; }

std::vector<std::vector<int>> parse_orderings(const std::string& text, int n) {
    std::vector<std::vector<int>> orderings;
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        std::vector<int> ordering;
        std::stringstream items(group);
        std::string item;
        while (std::getline(items, item, ','))
            ordering.push_back(std::stoi(item) - 1);
        if (static_cast<int>(ordering.size()) != n)
            throw cirregime::ContractError("ordering '" + group + "' must list all regimes");
        orderings.push_back(std::move(ordering));
    }
    return orderings;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream items(text);
    std::string item;
    while (std::getline(items, item, ',')) values.push_back(std::stod(item));
    return values;
}

std::function<double(double, int)> parse_f_spec(const std::string& spec, double* p_out) {
    if (spec == "one") return [](double, int) { return 1.0; };
    if (spec == "value") return [](double r, int) { return r; };
    if (spec.rfind("value^p:", 0) == 0) {
        double p = std::stod(spec.substr(8));
        if (p_out) *p_out = p;
        return [p](double r, int) { return std::pow(r, p); };
    }
    if (spec.rfind("regime:", 0) == 0) {
        int i = std::stoi(spec.substr(7)) - 1;
        return [i](double, int regime) { return regime == i ? 1.0 : 0.0; };
    }
    throw std::invalid_argument("unknown --f spec '" + spec +
                                "' (expected one | value | value^p:<p> | regime:<i>)");
}

void parse_grid_spec(const std::string& text, double& lo, double& hi, int& steps) {
    std::stringstream ss(text);
    std::string part;
    if (!std::getline(ss, part, ':')) throw std::invalid_argument("bad grid spec");
    lo = std::stod(part);
    if (!std::getline(ss, part, ':')) throw std::invalid_argument("bad grid spec");
    hi = std::stod(part);
    if (!std::getline(ss, part, ':')) throw std::invalid_argument("bad grid spec");
    steps = std::stoi(part);
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const json::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';  // carries byte position
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid numeric argument: " << e.what() << '\n';
        return 2;
    } catch (const cirregime::StructuralError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const cirregime::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

std::vector<double> uniform_grid(double horizon, double dt) {
    auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    if (steps < 1) steps = 1;
    std::vector<double> grid(steps + 1);
    for (std::size_t g = 0; g <= steps; ++g) grid[g] = static_cast<double>(g) * dt;
    grid.back() = std::min(grid.back(), horizon);
    if (grid.back() < horizon) grid.push_back(horizon);
    return grid;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regime-switching CIR toolkit"};
    app.require_subcommand(1);

    std::string model_file;
    std::uint64_t seed = kDefaultSeed;
    int threads_flag = 0;

    // --- validate ---------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "check model conditions");
    validate_cmd->add_option("model", model_file, "model JSON file")->required();

    // --- classify ---------------------------------------------------------
    auto* classify_cmd = app.add_subcommand("classify", "recurrence and tail verdicts");
    classify_cmd->add_option("model", model_file)->required();
    std::string orderings_text;
    classify_cmd->add_option("--orderings", orderings_text,
                             "extra regime orderings, e.g. \"2,1;1,2\" (1-based)");
    std::string p_grid_text = "0:3:61";
    classify_cmd->add_option("--p-grid", p_grid_text, "spectral summary grid min:max:steps");

    // --- spectral ---------------------------------------------------------
    auto* spectral_cmd = app.add_subcommand("spectral", "eta curve, kappa, eta~_1");
    spectral_cmd->add_option("model", model_file)->required();
    double p_min = 0, p_max = 3;
    int p_steps = 61;
    spectral_cmd->add_option("--p-min", p_min);
    spectral_cmd->add_option("--p-max", p_max);
    spectral_cmd->add_option("--p-steps", p_steps)->check(CLI::PositiveNumber);
    std::string spectral_out = "spectral.csv";
    spectral_cmd->add_option("--out", spectral_out, "CSV path for the (p, eta) curve");

    // --- simulate ---------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "sample trajectories");
    simulate_cmd->add_option("model", model_file)->required();
    double x0 = 1.0, horizon = 1.0, dt = 0.01;
    int n_paths = 1;
    std::string scheme_name = "exact";
    std::string paths_out = "paths.csv";
    std::string skeleton_out;
    simulate_cmd->add_option("--x0", x0)->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--dt", dt)->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--paths", n_paths)->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--scheme", scheme_name)
        ->check(CLI::IsMember({"exact", "euler"}));
    simulate_cmd->add_option("--seed", seed);
    simulate_cmd->add_option("--out", paths_out, "CSV path for trajectories");
    simulate_cmd->add_option("--out-skeleton", skeleton_out,
                             "CSV path for the first path's jump skeleton");
    simulate_cmd->add_option("--threads", threads_flag);

    // --- tails ------------------------------------------------------------
    auto* tails_cmd = app.add_subcommand("tails", "empirical tail study");
    tails_cmd->add_option("model", model_file)->required();
    long tails_n = 200000;
    double burn_in = -1, delta = -1;
    std::string p_list_text = "0.5,1,2,4";
    std::string hill_out, moments_out;
    tails_cmd->add_option("--n", tails_n)->check(CLI::PositiveNumber);
    tails_cmd->add_option("--burn-in", burn_in);
    tails_cmd->add_option("--p-list", p_list_text);
    tails_cmd->add_option("--delta", delta);
    tails_cmd->add_option("--seed", seed);
    tails_cmd->add_option("--out-hill", hill_out, "CSV path for the Hill k-sweep");
    tails_cmd->add_option("--out-moments", moments_out, "CSV path for the moment table");
    tails_cmd->add_option("--threads", threads_flag);

    // --- bessel-check -----------------------------------------------------
    auto* bessel_cmd = app.add_subcommand("bessel-check",
                                          "squared-Bessel time-change identity test");
    bessel_cmd->add_option("model", model_file)->required();
    double bessel_t = 1.0;
    long bessel_n = 10000;
    bessel_cmd->add_option("--t", bessel_t)->check(CLI::PositiveNumber);
    bessel_cmd->add_option("--n", bessel_n)->check(CLI::PositiveNumber);
    bessel_cmd->add_option("--seed", seed);

    // --- ergodic ----------------------------------------------------------
    auto* ergodic_cmd = app.add_subcommand("ergodic", "long-path time average");
    ergodic_cmd->add_option("model", model_file)->required();
    std::string f_spec;
    double ergodic_horizon = 10000, ergodic_dt = 0.01;
    ergodic_cmd->add_option("--f", f_spec, "one | value | value^p:<p> | regime:<i>")
        ->required();
    ergodic_cmd->add_option("--horizon", ergodic_horizon)->check(CLI::PositiveNumber);
    ergodic_cmd->add_option("--dt", ergodic_dt)->check(CLI::PositiveNumber);
    ergodic_cmd->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    Timer timer;

    if (validate_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            auto report = cirregime::validate(loaded.spec);
            json payload = cirregime::io::to_json(report);
            bool usable = report.usable;
            if (loaded.is_state_dependent()) {
                auto sd_report = cirregime::validate(*loaded.state_dep);
                payload["state_dependent"] = cirregime::io::to_json(sd_report);
                usable = usable && sd_report.usable;
            }
            payload["manifest"] = make_manifest("validate", model_file, 0, json::object());
            emit(payload);
            std::cerr << "validate: " << timer.elapsed_ms() << " ms\n";
            return usable ? 0 : 1;
        });
    }

    if (classify_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            auto report = cirregime::validate(loaded.spec);
            if (!report.usable)
                throw cirregime::ContractError(
                    std::string("model failed validation: ") + report.first_failing());

            json payload;
            cirregime::RecurrenceVerdict recurrence;
            if (loaded.is_state_dependent()) {
                auto extra = orderings_text.empty()
                                 ? std::vector<std::vector<int>>{}
                                 : parse_orderings(orderings_text,
                                                   static_cast<int>(loaded.spec.n_regimes()));
                recurrence = cirregime::classify_recurrence_state_dep(*loaded.state_dep, extra);
                payload = cirregime::io::to_json(recurrence);
            } else {
                recurrence = cirregime::classify_recurrence(loaded.spec);
                payload = cirregime::io::to_json(recurrence);
                if (recurrence.verdict == cirregime::Recurrence::PositiveRecurrent) {
                    auto tail = cirregime::classify_tail(loaded.spec);
                    payload.update(cirregime::io::to_json(tail));
                }
                double lo = 0, hi = 3;
                int steps = 61;
                parse_grid_spec(p_grid_text, lo, hi, steps);
                auto curve = cirregime::spectral_curve(loaded.spec, lo, hi, steps);
                json spectral = cirregime::io::to_json(curve);
                spectral.erase("p");
                spectral.erase("eta");
                payload["spectral"] = std::move(spectral);
            }
            payload["manifest"] = make_manifest("classify", model_file, 0, json::object());
            emit(payload);
            std::cerr << "classify: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    if (spectral_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            auto report = cirregime::validate(loaded.spec);
            if (!report.usable)
                throw cirregime::ContractError(
                    std::string("model failed validation: ") + report.first_failing());
            auto curve = cirregime::spectral_curve(loaded.spec, p_min, p_max, p_steps);
            cirregime::io::write_spectral_csv(spectral_out, curve);
            json manifest = make_manifest(
                "spectral", model_file, 0,
                json{{"p_min", p_min}, {"p_max", p_max}, {"p_steps", p_steps}});
            write_sidecar_manifest(spectral_out, manifest, timer.elapsed_ms());
            json payload = cirregime::io::to_json(curve);
            payload["manifest"] = manifest;
            emit(payload);
            std::cerr << "spectral: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    if (simulate_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            auto grid = uniform_grid(horizon, dt);
            auto scheme = scheme_name == "exact" ? cirregime::Scheme::ExactNCChi2
                                                 : cirregime::Scheme::FullTruncationEuler;
            int threads = resolve_threads(threads_flag);
            cirregime::PathBundle bundle =
                loaded.is_state_dependent()
                    ? cirregime::simulate_paths(*loaded.state_dep, x0, grid, n_paths,
                                                scheme, seed, threads)
                    : cirregime::simulate_paths(loaded.spec, x0, grid, n_paths, scheme,
                                                seed, threads);
            cirregime::io::write_paths_csv(paths_out, bundle);
            json manifest = make_manifest(
                "simulate", model_file, seed,
                json{{"x0", x0},
                     {"horizon", horizon},
                     {"dt", dt},
                     {"paths", n_paths},
                     {"scheme", scheme_name}});
            write_sidecar_manifest(paths_out, manifest, timer.elapsed_ms());
            if (!skeleton_out.empty() && !loaded.is_state_dependent()) {
                std::mt19937_64 rng = cirregime::stream_engine(seed, 0);
                auto mu = cirregime::invariant_measure(loaded.spec).mu;
                auto skel = cirregime::sample_regime_path(loaded.spec, horizon, rng, &mu);
                cirregime::io::write_skeleton_csv(skeleton_out, skel);
            }
            json payload{{"paths", n_paths},
                         {"times", grid.size()},
                         {"positivity_violations", bundle.positivity_violations},
                         {"out", paths_out},
                         {"manifest", manifest}};
            emit(payload);
            std::cerr << "simulate: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    if (tails_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            if (burn_in <= 0) burn_in = cirregime::default_burn_in(loaded.spec);
            auto p_list = parse_double_list(p_list_text);
            int threads = resolve_threads(threads_flag);
            auto report = cirregime::tail_report(loaded.spec, tails_n, burn_in, p_list,
                                                 delta, seed, threads);
            json manifest = make_manifest(
                "tails", model_file, seed,
                json{{"n", tails_n}, {"burn_in", burn_in}, {"p_list", p_list_text}});
            if (!hill_out.empty()) {
                auto sample = cirregime::stationary_sample(loaded.spec, tails_n, burn_in,
                                                           seed + 2, threads);
                cirregime::io::write_hill_sweep_csv(hill_out,
                                                    cirregime::hill_sweep(sample.values));
                write_sidecar_manifest(hill_out, manifest, timer.elapsed_ms());
            }
            if (!moments_out.empty()) {
                cirregime::io::write_moment_csv(moments_out, report.moments);
                write_sidecar_manifest(moments_out, manifest, timer.elapsed_ms());
            }
            json payload = cirregime::io::to_json(report);
            payload["manifest"] = manifest;
            emit(payload);
            std::cerr << "tails: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    if (bessel_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            auto result = cirregime::bessel_time_change_check(loaded.spec, bessel_t,
                                                              bessel_n, seed);
            json payload = cirregime::io::to_json(result);
            payload["manifest"] = make_manifest(
                "bessel-check", model_file, seed,
                json{{"t", bessel_t}, {"n", bessel_n}});
            emit(payload);
            std::cerr << "bessel-check: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    if (ergodic_cmd->parsed()) {
        return run_guarded([&] {
            auto loaded = cirregime::io::load_model_file(model_file);
            double f_power = 0;
            auto f = parse_f_spec(f_spec, &f_power);
            auto average = cirregime::ergodic_average(loaded.spec, f, ergodic_horizon,
                                                      seed, ergodic_dt);
            json payload{{"f", f_spec},
                         {"average", average.value},
                         {"top_fraction", average.top_fraction},
                         {"integrability_warning", average.integrability_warning},
                         {"manifest",
                          make_manifest("ergodic", model_file, seed,
                                        json{{"f", f_spec},
                                             {"horizon", ergodic_horizon},
                                             {"dt", ergodic_dt}})}};
            emit(payload);
            std::cerr << "ergodic: " << timer.elapsed_ms() << " ms\n";
            return 0;
        });
    }

    return 2;
}
