#include "cirregime/io.hpp"

#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cirregime::io {

namespace {

Vector vector_from_json(const json& j, const char* key, Eigen::Index expected) {
    if (!j.is_array())
        throw StructuralError(std::string("model key '") + key + "' must be an array");
    if (static_cast<Eigen::Index>(j.size()) != expected)
        throw StructuralError(std::string("model key '") + key + "' has wrong length");
    Vector v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number())
            throw StructuralError(std::string("model key '") + key + "' must hold numbers");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

std::pair<int, int> parse_pair_key(const std::string& key, Eigen::Index n) {
    std::string digits;
    std::vector<int> parts;
    auto flush = [&]() {
        if (!digits.empty()) {
            parts.push_back(std::stoi(digits));
            digits.clear();
        }
    };
    for (char c : key) {
        if (std::isdigit(static_cast<unsigned char>(c)))
            digits.push_back(c);
        else
            flush();
    }
    flush();
    int i = 0, j = 0;
    if (parts.size() == 2) {
        i = parts[0];
        j = parts[1];
    } else if (parts.size() == 1 && key.size() == 2) {
        i = parts[0] / 10;
        j = parts[0] % 10;
    } else {
        throw StructuralError("state_dependent key '" + key +
                              "' must name a regime pair like \"12\" or \"1,2\"");
    }
    if (i < 1 || j < 1 || i > n || j > n || i == j)
        throw StructuralError("state_dependent key '" + key + "' is out of range");
    return {i - 1, j - 1};
}

RateFunction parse_rate(const json& j, const std::string& key) {
    if (!j.is_object() || !j.contains("kind"))
        throw StructuralError("state_dependent entry '" + key + "' needs a \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, _] : j.items()) {
            bool ok = false;
            for (const char* a : allowed)
                if (k == a) ok = true;
            if (!ok)
                throw StructuralError("unknown key '" + k + "' in state_dependent entry '" +
                                      key + "'");
        }
    };
    if (kind == "constant") {
        reject_unknown({"kind", "value"});
        return RateFunction::constant(j.at("value").get<double>());
    }
    if (kind == "logistic") {
        reject_unknown({"kind", "lower", "upper", "midpoint", "steepness"});
        return RateFunction::logistic(
            j.at("lower").get<double>(), j.at("upper").get<double>(),
            j.at("midpoint").get<double>(), j.at("steepness").get<double>());
    }
    if (kind == "piecewise") {
        reject_unknown({"kind", "breakpoints", "values"});
        return RateFunction::piecewise(j.at("breakpoints").get<std::vector<double>>(),
                                       j.at("values").get<std::vector<double>>());
    }
    throw StructuralError("state_dependent entry '" + key + "' has unknown kind '" +
                          kind + "'");
}

json json_or_inf(double x) {
    if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
    return json(x);
}

} // namespace

LoadedModel parse_model(const json& j) {
    if (!j.is_object())
        throw StructuralError("model file must hold a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "regimes" && key != "a" && key != "b" && key != "sigma" &&
            key != "Q" && key != "state_dependent")
            throw StructuralError("unknown model key '" + key + "'");
    }
    for (const char* key : {"regimes", "a", "b", "sigma", "Q"})
        if (!j.contains(key))
            throw StructuralError(std::string("model key '") + key + "' is missing");

    if (!j.at("regimes").is_number_integer())
        throw StructuralError("model key 'regimes' must be an integer");
    const auto n = j.at("regimes").get<Eigen::Index>();
    if (n < 1)
        throw StructuralError("model needs at least one regime");

    LoadedModel loaded;
    loaded.spec.a = vector_from_json(j.at("a"), "a", n);
    loaded.spec.b = vector_from_json(j.at("b"), "b", n);
    loaded.spec.sigma = vector_from_json(j.at("sigma"), "sigma", n);

    const json& q = j.at("Q");
    if (!q.is_array() || static_cast<Eigen::Index>(q.size()) != n)
        throw StructuralError("model key 'Q' must be an NxN array of arrays");
    loaded.spec.q.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        loaded.spec.q.row(i) = vector_from_json(q[static_cast<std::size_t>(i)], "Q", n);

    if (j.contains("state_dependent")) {
        const json& sd_json = j.at("state_dependent");
        if (!sd_json.is_object())
            throw StructuralError("model key 'state_dependent' must be an object");
        StateDepModel sd = StateDepModel::from_model_spec(loaded.spec);
        for (const auto& [key, value] : sd_json.items()) {
            auto [i, jdx] = parse_pair_key(key, n);
            sd.rates[static_cast<std::size_t>(i * n + jdx)] = parse_rate(value, key);
        }
        loaded.state_dep = std::move(sd);
    }
    return loaded;
}

LoadedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ContractError("cannot open model file '" + path + "'");
    json j = json::parse(in);  // json::parse_error carries byte position
    return parse_model(j);
}

json to_json(const ValidationReport& report) {
    json conditions = json::array();
    for (const auto& entry : report.conditions) {
        json e{{"condition", condition_name(entry.code)}, {"passed", entry.passed}};
        if (!entry.detail.empty()) e["detail"] = entry.detail;
        conditions.push_back(std::move(e));
    }
    json out{{"conditions", std::move(conditions)}, {"usable", report.usable}};
    if (const char* failing = report.first_failing()) out["first_failing"] = failing;
    return out;
}

json to_json(const SpectralCurve& curve) {
    json p = json::array(), eta = json::array();
    for (Eigen::Index i = 0; i < curve.p_grid.size(); ++i) {
        p.push_back(curve.p_grid[i]);
        eta.push_back(curve.eta[i]);
    }
    return json{{"p", std::move(p)},
                {"eta", std::move(eta)},
                {"kappa", json_or_inf(curve.kappa)},
                {"kappa_bound", json_or_inf(curve.kappa_upper_bound)},
                {"eta_tilde_1", curve.eta_tilde_1},
                {"drift_positive", curve.drift_positive}};
}

json to_json(const RecurrenceVerdict& verdict) {
    json out{{"recurrence", to_string(verdict.verdict)},
             {"witness", verdict.drift_witness}};
    if (verdict.witness_p) out["witness_p"] = *verdict.witness_p;
    if (verdict.witness_ordering) {
        json ord = json::array();
        for (int i : *verdict.witness_ordering) ord.push_back(i + 1);
        out["witness_ordering"] = std::move(ord);
    }
    if (verdict.witness_diagnostics) {
        json minors = json::array();
        for (Eigen::Index i = 0; i < verdict.witness_diagnostics->leading_minors.size(); ++i)
            minors.push_back(verdict.witness_diagnostics->leading_minors[i]);
        out["leading_minors"] = std::move(minors);
    }
    return out;
}

json to_json(const TailVerdict& verdict) {
    json tail{{"kind", to_string(verdict.kind)}};
    switch (verdict.kind) {
        case TailKind::LightTailed:
            tail["delta_max"] = verdict.delta_max;
            tail["alpha"] = verdict.alpha;
            break;
        case TailKind::HeavyTailed:
            tail["kappa"] = verdict.kappa;
            break;
        case TailKind::Inconclusive:
            tail["reason"] = verdict.reason;
            if (verdict.kappa > 0) tail["kappa"] = json_or_inf(verdict.kappa);
            break;
    }
    return json{{"tail", std::move(tail)}, {"theorem", route_label(verdict.route)}};
}

json to_json(const MomentProbe& probe) {
    json rows = json::array();
    for (const auto& row : probe.rows)
        rows.push_back(json{{"p", row.p}, {"n", row.n}, {"estimate", row.estimate}});
    json verdicts = json::array();
    for (const auto& [p, v] : probe.verdicts)
        verdicts.push_back(json{{"p", p}, {"verdict", to_string(v)}});
    return json{{"rows", std::move(rows)}, {"verdicts", std::move(verdicts)}};
}

json to_json(const ExpMomentProbe& probe) {
    json by_n = json::array();
    for (const auto& [n, log_est] : probe.log_by_n)
        by_n.push_back(json{{"n", n}, {"log_estimate", log_est}});
    return json{{"delta", probe.delta},
                {"estimate", std::isfinite(probe.estimate) ? json(probe.estimate)
                                                           : json("overflow")},
                {"log_estimate", probe.log_estimate},
                {"verdict", to_string(probe.verdict)},
                {"by_n", std::move(by_n)}};
}

json to_json(const TailReport& report) {
    return json{{"hill", json{{"estimate", report.hill_index},
                              {"k", report.hill_k},
                              {"divergent", report.hill_divergent}}},
                {"moments", to_json(report.moments)},
                {"exp_probe", to_json(report.exp_probe)},
                {"classifier", to_json(report.classifier)},
                {"verdict_consistency", report.verdict_consistency},
                {"low_n_warning", report.low_n_warning}};
}

json to_json(const BesselCheckResult& result) {
    return json{{"ks", result.ks}, {"pass", result.pass}, {"t", result.t}, {"n", result.n}};
}

json to_json(const SandwichTable& table) {
    json rows = json::array();
    for (std::size_t i = 0; i < table.t.size(); ++i)
        rows.push_back(json{{"t", table.t[i]}, {"mc", table.mc[i]}, {"theory", table.theory[i]}});
    return json{{"p", table.p},
                {"eta_p", table.eta_p},
                {"rows", std::move(rows)},
                {"fitted_slope", table.fitted_slope},
                {"fitted_intercept", table.fitted_intercept}};
}

std::string format_double(double x) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ContractError("cannot open output file '" + path + "'");
    return out;
}

} // namespace

void write_spectral_csv(const std::string& path, const SpectralCurve& curve) {
    auto out = open_out(path);
    out << "p,eta\n";
    for (Eigen::Index i = 0; i < curve.p_grid.size(); ++i)
        out << format_double(curve.p_grid[i]) << ',' << format_double(curve.eta[i]) << '\n';
}

void write_paths_csv(const std::string& path, const PathBundle& bundle) {
    auto out = open_out(path);
    out << "path_id,t,r,regime\n";
    for (Eigen::Index p = 0; p < bundle.r.rows(); ++p)
        for (Eigen::Index g = 0; g < bundle.r.cols(); ++g)
            out << p << ',' << format_double(bundle.time_grid[static_cast<std::size_t>(g)])
                << ',' << format_double(bundle.r(p, g)) << ',' << bundle.regimes(p, g)
                << '\n';
}

void write_skeleton_csv(const std::string& path, const RegimeSkeleton& skeleton) {
    auto out = open_out(path);
    out << "k,tau_k,state\n";
    out << 0 << ',' << format_double(0.0) << ',' << skeleton.states[0] << '\n';
    for (std::size_t k = 0; k < skeleton.jump_times.size(); ++k)
        out << (k + 1) << ',' << format_double(skeleton.jump_times[k]) << ','
            << skeleton.states[k + 1] << '\n';
}

void write_moment_csv(const std::string& path, const MomentProbe& probe) {
    auto out = open_out(path);
    out << "p,n,estimate\n";
    for (const auto& row : probe.rows)
        out << format_double(row.p) << ',' << row.n << ',' << format_double(row.estimate)
            << '\n';
}

void write_sandwich_csv(const std::string& path, const SandwichTable& table) {
    auto out = open_out(path);
    out << "t,mc,theory\n";
    for (std::size_t i = 0; i < table.t.size(); ++i)
        out << format_double(table.t[i]) << ',' << format_double(table.mc[i]) << ','
            << format_double(table.theory[i]) << '\n';
}

void write_hill_sweep_csv(const std::string& path, const HillSweep& sweep) {
    auto out = open_out(path);
    out << "k,estimate\n";
    for (std::size_t i = 0; i < sweep.k.size(); ++i)
        out << sweep.k[i] << ',' << format_double(sweep.estimate[i]) << '\n';
}

std::string fnv1a_hex(const std::string& content) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : content) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buffer[20];
    std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, hash);
    return buffer;
}

} // namespace cirregime::io
