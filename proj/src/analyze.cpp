#include "cirregime/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "cirregime/spectral.hpp"

namespace cirregime {

namespace {

constexpr double kStabilizeBand = 0.2;  // last two estimates within 20%
constexpr double kExplodeFactor = 10.0;

void run_blocks(long n, int threads, const std::function<void(long, long)>& body) {
    threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, n)));
    if (threads == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    long block = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        long lo = t * block;
        long hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

double log_sum_exp(const std::vector<double>& xs, long n) {
    double m = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) m = std::max(m, xs[static_cast<std::size_t>(i)]);
    if (!std::isfinite(m)) return m;
    double acc = 0;
    for (long i = 0; i < n; ++i) acc += std::exp(xs[static_cast<std::size_t>(i)] - m);
    return m + std::log(acc);
}

ProbeVerdict verdict_from_estimates(const std::vector<double>& estimates) {
    if (estimates.size() < 2) return ProbeVerdict::Indeterminate;
    double first = estimates.front(), last = estimates.back();
    if (first > 0 && last / first >= kExplodeFactor) return ProbeVerdict::Exploding;
    double prev = estimates[estimates.size() - 2];
    if (prev > 0 && std::abs(last - prev) <= kStabilizeBand * prev)
        return ProbeVerdict::Stabilizing;
    return ProbeVerdict::Indeterminate;
}

ProbeVerdict verdict_from_log_estimates(const std::vector<double>& logs) {
    if (logs.size() < 2) return ProbeVerdict::Indeterminate;
    if (logs.back() - logs.front() >= std::log(kExplodeFactor))
        return ProbeVerdict::Exploding;
    if (std::abs(logs.back() - logs[logs.size() - 2]) <= std::log1p(kStabilizeBand))
        return ProbeVerdict::Stabilizing;
    return ProbeVerdict::Indeterminate;
}

void require_positive_recurrent(const ModelSpec& spec) {
    if (classify_recurrence(spec).verdict != Recurrence::PositiveRecurrent)
        throw ContractError(
            "stationary estimation requires a positive recurrent model "
            "(drift index must be strictly positive)");
}

// Overdispersed initial value: log-normal around the coarse level scale.
double draw_initial_value(std::mt19937_64& rng, double level_scale) {
    return level_scale * std::exp(draw_normal(rng));
}

double slope_fit(const std::vector<double>& x, const std::vector<double>& y,
                 double* intercept) {
    double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    double slope = sxx > 0 ? sxy / sxx : 0.0;
    if (intercept) *intercept = ym - slope * xm;
    return slope;
}

} // namespace

const char* to_string(ProbeVerdict v) {
    switch (v) {
        case ProbeVerdict::Stabilizing: return "stabilizing";
        case ProbeVerdict::Exploding: return "exploding";
        case ProbeVerdict::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

double default_burn_in(const ModelSpec& spec) {
    double min_scale = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < spec.n_regimes(); ++i)
        if (spec.a[i] != 0) min_scale = std::min(min_scale, std::abs(spec.a[i]));
    if (!std::isfinite(min_scale)) min_scale = 1.0;
    return 50.0 / min_scale;
}

StationarySample stationary_sample(const ModelSpec& spec, long n, double burn_in,
                                   std::uint64_t seed, int threads) {
    if (n < 1)
        throw ContractError("sample size must be positive");
    if (!(burn_in > 0))
        throw ContractError("burn-in must be positive");
    require_positive_recurrent(spec);

    const double horizon = 2 * burn_in;
    const Eigen::Index n_regimes = spec.n_regimes();
    const Vector uniform = Vector::Constant(n_regimes, 1.0 / static_cast<double>(n_regimes));
    const double level_scale = std::max(1.0, spec.b.cwiseAbs().maxCoeff());

    StationarySample out;
    out.burn_in = burn_in;
    out.horizon = horizon;
    out.n = n;
    out.values.resize(static_cast<std::size_t>(n));
    out.regimes.resize(static_cast<std::size_t>(n));
    std::vector<double> mid(static_cast<std::size_t>(n));

    run_blocks(n, threads, [&](long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(p));
            double x0 = draw_initial_value(rng, level_scale);
            TerminalDraw draw = exact_terminal(spec, x0, burn_in, horizon, rng, uniform);
            mid[static_cast<std::size_t>(p)] = draw.mid_value;
            out.values[static_cast<std::size_t>(p)] = draw.value;
            out.regimes[static_cast<std::size_t>(p)] = draw.regime;
        }
    });

    out.burn_in_ks = ks_distance(mid, out.values);
    return out;
}

double hill_estimator(const std::vector<double>& values, long k) {
    const long n = static_cast<long>(values.size());
    if (k < 10)
        throw ContractError("Hill estimator needs k >= 10");
    if (k >= n)
        throw ContractError("Hill estimator needs k < n");
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (!(sorted.back() > 0))
        throw ContractError("Hill estimator needs positive values");
    const double threshold = sorted[static_cast<std::size_t>(k)];  // X_(n-k)
    double acc = 0;
    for (long i = 0; i < k; ++i)
        acc += std::log(sorted[static_cast<std::size_t>(i)] / threshold);
    acc /= static_cast<double>(k);
    if (acc <= 0)
        throw DegenerateChainError("Hill estimator degenerate: tied order statistics");
    return 1.0 / acc;
}

HillSweep hill_sweep(const std::vector<double>& values) {
    const long n = static_cast<long>(values.size());
    HillSweep sweep;
    long k = default_hill_k(n);
    if (k < 10) return sweep;
    // log-spaced sweep from ~n/4 down to 10
    for (long kk = std::max<long>(10, n / 4); kk >= 10; kk = (2 * kk) / 3) {
        sweep.k.push_back(kk);
        sweep.estimate.push_back(hill_estimator(values, kk));
        if (kk == 10) break;
    }
    if (sweep.estimate.size() >= 2) {
        double at_large_k = sweep.estimate.front();
        double at_small_k = sweep.estimate.back();
        sweep.divergent = at_large_k > 0 && at_small_k / at_large_k > 1.5;
    }
    return sweep;
}

MomentProbe moment_explosion_probe(const ModelSpec& spec,
                                   const std::vector<double>& p_list,
                                   const std::vector<long>& n_list, double burn_in,
                                   std::uint64_t seed, int threads) {
    if (n_list.empty() || !std::is_sorted(n_list.begin(), n_list.end()))
        throw ContractError("sample sizes must be increasing");
    StationarySample sample = stationary_sample(spec, n_list.back(), burn_in, seed, threads);

    MomentProbe probe;
    for (double p : p_list) {
        std::vector<double> estimates;
        double acc = 0;
        std::size_t consumed = 0;
        for (long n : n_list) {
            for (; consumed < static_cast<std::size_t>(n); ++consumed)
                acc += std::pow(sample.values[consumed], p);
            double est = acc / static_cast<double>(n);
            probe.rows.push_back({p, n, est});
            estimates.push_back(est);
        }
        probe.verdicts.emplace_back(p, verdict_from_estimates(estimates));
    }
    return probe;
}

ExpMomentProbe exp_moment_probe(const ModelSpec& spec, double delta, long n,
                                double burn_in, std::uint64_t seed, int threads) {
    if (delta < 0)
        throw ContractError("exponential moment probe needs delta >= 0");
    StationarySample sample = stationary_sample(spec, n, burn_in, seed, threads);

    std::vector<double> exponents(sample.values.size());
    for (std::size_t i = 0; i < sample.values.size(); ++i)
        exponents[i] = delta * sample.values[i];

    ExpMomentProbe probe;
    probe.delta = delta;
    std::vector<double> logs;
    for (long m : {n / 4, n / 2, n}) {
        if (m < 1) continue;
        double log_est = log_sum_exp(exponents, m) - std::log(static_cast<double>(m));
        probe.log_by_n.emplace_back(m, log_est);
        logs.push_back(log_est);
    }
    probe.log_estimate = logs.back();
    probe.estimate = std::exp(probe.log_estimate);
    probe.verdict = delta == 0 ? ProbeVerdict::Stabilizing : verdict_from_log_estimates(logs);
    if (delta == 0) probe.estimate = 1.0;
    return probe;
}

ErgodicAverage ergodic_average(const ModelSpec& spec,
                               const std::function<double(double, int)>& f,
                               double horizon, std::uint64_t seed, double dt) {
    if (!(horizon > 0) || !(dt > 0) || dt >= horizon)
        throw ContractError("ergodic average needs 0 < dt < horizon");
    require_positive_recurrent(spec);

    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    std::vector<double> grid(steps + 1);
    for (std::size_t g = 0; g <= steps; ++g) grid[g] = static_cast<double>(g) * dt;

    ValidationReport report = validate(spec);
    Scheme scheme = report.h1() ? Scheme::ExactNCChi2 : Scheme::FullTruncationEuler;
    PathBundle bundle = simulate_paths(spec, std::max(1.0, spec.b.cwiseAbs().maxCoeff()),
                                       grid, 1, scheme, seed);

    std::vector<double> fv(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        fv[g] = f(bundle.r(0, static_cast<Eigen::Index>(g)),
                  bundle.regimes(0, static_cast<Eigen::Index>(g)));
        if (!std::isfinite(fv[g]))
            throw ContractError("ergodic average: f returned a non-finite value");
    }

    double integral = 0;
    for (std::size_t g = 0; g + 1 < grid.size(); ++g)
        integral += 0.5 * (fv[g] + fv[g + 1]) * dt;
    double t_total = grid.back() - grid.front();

    // integrability diagnostic: how much of the mass sits in the top 1%
    std::vector<double> mags(fv.size());
    for (std::size_t g = 0; g < fv.size(); ++g) mags[g] = std::abs(fv[g]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double total_mag = std::accumulate(mags.begin(), mags.end(), 0.0);
    std::size_t top = std::max<std::size_t>(1, mags.size() / 100);
    double top_mag = std::accumulate(mags.begin(), mags.begin() + static_cast<long>(top), 0.0);

    ErgodicAverage out;
    out.value = integral / t_total;
    out.top_fraction = total_mag > 0 ? top_mag / total_mag : 0.0;
    out.integrability_warning = out.top_fraction > 0.5;
    return out;
}

SandwichTable eta_sandwich_check(const ModelSpec& spec, double p,
                                 const std::vector<double>& t_grid, long n,
                                 std::uint64_t seed) {
    if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw ContractError("sandwich check needs an increasing time grid");
    if (n < 2)
        throw ContractError("sandwich check needs at least two skeletons");

    const Vector mu = invariant_measure(spec).mu;
    const double horizon = t_grid.back();
    std::vector<std::vector<double>> exponents(
        t_grid.size(), std::vector<double>(static_cast<std::size_t>(n)));

    for (long s = 0; s < n; ++s) {
        std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(s));
        RegimeSkeleton skel = sample_regime_path(spec, horizon, rng, &mu);
        for (std::size_t g = 0; g < t_grid.size(); ++g)
            exponents[g][static_cast<std::size_t>(s)] =
                -p * skel.integrate(spec.a, t_grid[g]);
    }

    SandwichTable table;
    table.p = p;
    table.eta_p = eta(spec, p);
    table.t = t_grid;
    std::vector<double> log_mc(t_grid.size());
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        log_mc[g] = log_sum_exp(exponents[g], n) - std::log(static_cast<double>(n));
        table.mc.push_back(std::exp(log_mc[g]));
        table.theory.push_back(std::exp(-table.eta_p * t_grid[g]));
    }
    table.fitted_slope = slope_fit(t_grid, log_mc, &table.fitted_intercept);
    return table;
}

double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b) {
    if (sample_a.empty() || sample_b.empty())
        throw ContractError("KS distance needs nonempty samples");
    std::sort(sample_a.begin(), sample_a.end());
    std::sort(sample_b.begin(), sample_b.end());
    const double na = static_cast<double>(sample_a.size());
    const double nb = static_cast<double>(sample_b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < sample_a.size() || j < sample_b.size()) {
        double v;
        if (i == sample_a.size())
            v = sample_b[j];
        else if (j == sample_b.size())
            v = sample_a[i];
        else
            v = std::min(sample_a[i], sample_b[j]);
        while (i < sample_a.size() && sample_a[i] <= v) ++i;
        while (j < sample_b.size() && sample_b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

BesselCheckResult bessel_time_change_check(const ModelSpec& spec, double t, long n,
                                           std::uint64_t seed) {
    if (n < 2)
        throw ContractError("time-change check needs at least two paths");
    if (!(t > 0))
        throw ContractError("time-change check needs t > 0");
    ValidationReport report = validate(spec);
    if (!report.h1())
        throw ContractError("time-change check requires H1 (exact stepping)");

    const Vector mu = invariant_measure(spec).mu;
    const double x0 = std::max(1.0, spec.b.cwiseAbs().maxCoeff());

    std::vector<double> direct(static_cast<std::size_t>(n));
    std::vector<double> transformed(static_cast<std::size_t>(n));

    for (long p = 0; p < n; ++p) {
        std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(p));
        RegimeSkeleton skel = sample_regime_path(spec, t, rng, &mu);

        // direct side, chained exactly along the shared skeleton
        {
            double r = x0, t_cur = 0;
            for (std::size_t k = 0; k < skel.n_intervals(); ++k) {
                double t_next = k < skel.jump_times.size() ? skel.jump_times[k] : t;
                int i = skel.states[k];
                if (t_next > t_cur)
                    r = exact_cir_step(spec.a[i], spec.b[i], spec.sigma[i], r,
                                       t_next - t_cur, rng);
                t_cur = t_next;
            }
            direct[static_cast<std::size_t>(p)] = r;
        }

        // transformed side: step rho exactly on the C-clock, then undo ell
        {
            TimeChange tc(spec.a, skel);
            double rho = x0, u_cur = 0;
            const double u_end = tc.C(t);
            for (std::size_t k = 0; k < skel.n_intervals(); ++k) {
                double u_next = k + 1 < skel.n_intervals()
                                    ? std::min(tc.interval_C()[k + 1], u_end)
                                    : u_end;
                int i = skel.states[k];
                if (u_next > u_cur)
                    rho = exact_bessel_step(spec.a[i] * spec.b[i], spec.sigma[i], rho,
                                            u_next - u_cur, rng);
                u_cur = u_next;
            }
            transformed[static_cast<std::size_t>(p)] = rho / tc.ell(t);
        }
    }

    BesselCheckResult result;
    result.t = t;
    result.n = n;
    result.ks = ks_distance(direct, transformed);
    result.pass = result.ks < 0.02;
    return result;
}

TailReport tail_report(const ModelSpec& spec, long n, double burn_in,
                       const std::vector<double>& p_list, double delta,
                       std::uint64_t seed, int threads) {
    TailReport report;
    report.classifier = classify_tail(spec);
    report.low_n_warning = n < 1000;

    if (delta < 0)
        delta = report.classifier.kind == TailKind::LightTailed
                    ? report.classifier.delta_max / 2
                    : 0.25;

    std::vector<long> n_list{n / 100, n / 10, n};
    n_list.erase(std::remove_if(n_list.begin(), n_list.end(),
                                [](long m) { return m < 10; }),
                 n_list.end());
    if (n_list.empty()) n_list.push_back(n);

    report.moments =
        moment_explosion_probe(spec, p_list, n_list, burn_in, seed, threads);
    report.exp_probe = exp_moment_probe(spec, delta, n, burn_in, seed + 1, threads);

    StationarySample sample = stationary_sample(spec, n, burn_in, seed + 2, threads);
    report.hill_k = default_hill_k(n);
    report.hill_index = hill_estimator(sample.values, report.hill_k);
    report.hill_divergent = hill_sweep(sample.values).divergent;

    // consistency: the empirical findings should not contradict the verdict
    if (report.classifier.kind == TailKind::LightTailed) {
        bool no_explosion = true;
        for (const auto& [p, v] : report.moments.verdicts)
            if (v == ProbeVerdict::Exploding) no_explosion = false;
        report.verdict_consistency =
            no_explosion && report.exp_probe.verdict != ProbeVerdict::Exploding;
    } else if (report.classifier.kind == TailKind::HeavyTailed) {
        const double kappa = report.classifier.kappa;
        bool hill_near = std::abs(report.hill_index - kappa) <= 0.6;
        bool moments_ok = true;
        for (const auto& [p, v] : report.moments.verdicts) {
            if (p < kappa - 0.2 && v == ProbeVerdict::Exploding) moments_ok = false;
            if (p > kappa + 0.2 && v == ProbeVerdict::Stabilizing) moments_ok = false;
        }
        report.verdict_consistency = hill_near && moments_ok;
    } else {
        report.verdict_consistency = true;
    }
    return report;
}

} // namespace cirregime
