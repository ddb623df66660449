#include "fdia/harness.hpp"

#include "fdia/rng.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <thread>

namespace fdia {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (pmu.n_samples < 2) throw std::invalid_argument("pmu.n_samples must be >= 2");
    if (pmu.n_samples > static_cast<int>(sim.duration_s * pmu.rate_hz) + 1)
        throw std::invalid_argument("pmu.n_samples exceeds duration x rate");
    if (rtu_noise_std < 0 || pmu.noise.level < 0)
        throw std::invalid_argument("noise levels must be >= 0");
    if (lag_seconds <= 0) throw std::invalid_argument("lag_seconds must be positive");
    if (bdd.quantile <= 0 || bdd.quantile >= 1)
        throw std::invalid_argument("bdd.quantile must be in (0,1)");
    if (attack.v_factor && attack.v_abs)
        throw std::invalid_argument("attack magnitude given twice");
    if (attack.delta_abs_deg && attack.delta_offset_deg)
        throw std::invalid_argument("attack angle given twice");
}

CaseContext::CaseContext(NetworkModel net, double rate_hz)
    : net_(std::move(net)), eq_(solve_power_flow(net_)),
      model_(build_full_linear(net_, eq_)),
      dou_(discretize_ou(model_.a_matrix, model_.b_matrix, 1.0 / rate_hz)),
      rate_hz_(rate_hz) {}

namespace {

Trajectory make_trajectory(const ExperimentConfig& cfg, const CaseContext& ctx,
                           std::uint64_t seed) {
    if (cfg.sim.engine == SimEngine::Linear)
        return simulate_linearized(ctx.net(), ctx.equilibrium(), ctx.propagator(),
                                   ctx.linear_model(), cfg.pmu.n_samples,
                                   1.0 / cfg.pmu.rate_hz, seed);
    const double traj_rate = 1.0 / cfg.sim.dt_s;
    const int stride = static_cast<int>(std::llround(traj_rate / cfg.pmu.rate_hz));
    SimulateOptions so;
    so.store_stride = std::max(1, stride);
    const double duration = cfg.pmu.n_samples / cfg.pmu.rate_hz;
    return simulate(ctx.net(), duration, cfg.sim.dt_s, seed, so);
}

StateVector snapshot_from(const Trajectory& traj, const NetworkModel& net) {
    StateVector x = StateVector::flat(net.bus_count());
    const int row = traj.sample_count() - 1;
    for (int c = 0; c < net.bus_count(); ++c) {
        x.angle[c] = traj.angle(row, c);
        x.vmag[c] = traj.vmag(row, c);
    }
    return x;
}

Phasor target_phasor_from_spec(const AttackSpec& spec, const Phasor& base) {
    Phasor t = base;
    if (spec.v_factor) t.v = *spec.v_factor * base.v;
    if (spec.v_abs) t.v = *spec.v_abs;
    if (spec.delta_abs_deg) t.delta = *spec.delta_abs_deg * M_PI / 180.0;
    if (spec.delta_offset_deg) t.delta = base.delta + *spec.delta_offset_deg * M_PI / 180.0;
    return t;
}

RegionParams identify_params(const ExperimentConfig& cfg, const CaseContext& ctx,
                             const AttackRegion& region, const PmuSeries& series) {
    OUEstimate est = sample_stats(
        series, std::max(1, static_cast<int>(std::llround(cfg.lag_seconds * cfg.pmu.rate_hz))));
    estimate_a(est);
    std::map<int, TimeConstants> taus;
    for (int bus : region.interior())
        taus[bus] = estimate_time_constants(series, bus, cfg.pmu.n_small);
    const int k = static_cast<int>(est.bus_ordering.size());
    return estimate_line_params(est.a_hat, taus, est.mean.tail(k), est.mean.head(k),
                                est.bus_ordering, region);
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, const CaseContext& ctx,
                      std::uint64_t seed, const RegionParams* shared_params) {
    TrialResult out;
    out.seed = seed;
    const NetworkModel& net = ctx.net();
    try {
        AttackRegion region = build_region(net, cfg.target_bus);
        Trajectory traj = make_trajectory(cfg, ctx, seed);
        PmuSeries series = sample_pmu(traj, net, region.omega_a, cfg.pmu.rate_hz,
                                      cfg.pmu.noise, split_seed(seed, 1));

        RegionParams params;
        if (shared_params)
            params = *shared_params;
        else if (cfg.use_true_params)
            params = true_region_params(net, region);
        else
            params = identify_params(cfg, ctx, region, series);
        out.params_used = params;

        // attacker base values: latest PMU sample
        PhasorMap base;
        std::map<int, PQ> base_inj;
        const int last = series.n_samples - 1;
        for (size_t k = 0; k < series.bus_ids.size(); ++k) {
            const PmuChannel& ch = series.channels[k];
            base[series.bus_ids[k]] = {ch.v[last], ch.delta[last]};
            PqSeries pq = injections_from_pmu(series, series.bus_ids[k]);
            base_inj[series.bus_ids[k]] = {pq.p[last], pq.q[last]};
        }
        const Phasor target = target_phasor_from_spec(cfg.attack, base.at(cfg.target_bus));
        MaliciousState mal = complete_malicious_state(region, params, base, target);
        AttackVector av =
            build_attack_vector(net, region, params, base, base_inj, mal.phasors);

        // defender snapshot at the end of the collection window
        StateVector x_true = snapshot_from(traj, net);
        RtuMeasurementSet z =
            sample_rtu(net, x_true, cfg.rtu_noise_std, split_seed(seed, 2));

        std::optional<PmuSnapshot> pmu_clean, pmu_bad;
        PmuSeries defender_series;
        if (cfg.estimator.include_pmu) {
            std::set<int> dbuses(cfg.defender_pmu_buses.begin(),
                                 cfg.defender_pmu_buses.end());
            defender_series = sample_pmu(traj, net, dbuses, cfg.pmu.rate_hz,
                                         cfg.pmu.noise, split_seed(seed, 3));
            pmu_clean = latest_snapshot(defender_series);
        }

        auto [z_bad, defender_bad] = apply_attack(z, defender_series, av);
        if (cfg.estimator.include_pmu) pmu_bad = latest_snapshot(defender_bad);

        EstimationResult pre = estimate(net, z, pmu_clean, cfg.estimator);
        EstimationResult post = estimate(net, z_bad, pmu_bad, cfg.estimator);
        out.r_pre = pre.residual_inf;
        out.r_post = post.residual_inf;
        const int ti = net.index_of(cfg.target_bus);
        out.est_target_v = post.x_hat.vmag[ti];
        out.est_target_delta = post.x_hat.angle[ti];
        out.v_err = std::abs(out.est_target_v - target.v);
        out.delta_err = std::abs(out.est_target_delta - target.delta);
    } catch (const std::exception& e) {
        out.error = e.what();
        out.r_post = std::numeric_limits<double>::infinity();
    }
    return out;
}

double base_case_residual(const ExperimentConfig& cfg, const CaseContext& ctx,
                          std::uint64_t seed) {
    const NetworkModel& net = ctx.net();
    // snapshot drawn from the stationary law of the ambient dynamics
    Rng rng(seed);
    const int N = ctx.linear_model().state_dim();
    Eigen::VectorXd w(N);
    for (int i = 0; i < N; ++i) w[i] = rng.normal();
    Eigen::VectorXd dev = ctx.propagator().stationary_chol * w;
    StateVector x = ctx.equilibrium();
    const auto& model = ctx.linear_model();
    const int nd = static_cast<int>(model.dynamic_buses.size());
    for (int a = 0; a < nd; ++a) {
        x.angle[model.dynamic_buses[a]] += dev[a];
        x.vmag[model.dynamic_buses[a]] += dev[nd + a];
    }
    for (size_t g = 0; g < model.swing_buses.size(); ++g)
        x.angle[model.swing_buses[g]] += dev[2 * nd + static_cast<int>(g)];

    RtuMeasurementSet z = sample_rtu(net, x, cfg.rtu_noise_std, split_seed(seed, 2));
    std::optional<PmuSnapshot> pmu;
    if (cfg.estimator.include_pmu) {
        PmuSnapshot snap;
        Rng prng(split_seed(seed, 3));
        for (int bus : cfg.defender_pmu_buses) {
            const int i = net.index_of(bus);
            PQ inj = power_injection(net, x, bus);
            const double s = std::hypot(inj.p, inj.q);
            snap.phasors[bus] = {x.vmag[i], x.angle[i], s / x.vmag[i],
                                 x.angle[i] - std::atan2(inj.q, inj.p)};
        }
        pmu = snap;
    }
    return estimate(net, z, pmu, cfg.estimator).residual_inf;
}

std::pair<double, double> wilson_interval(int successes, int n) {
    if (n == 0) return {0.0, 1.0};
    if (successes == 0 || successes == n) {
        const double z2 = 3.841458820694124;  // z^2 at 95%
        const double edge = z2 / (n + z2);
        return successes == 0 ? std::pair{0.0, edge} : std::pair{1.0 - edge, 1.0};
    }
    const double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (workers <= 0)
        workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, count));
    std::atomic<int> next{0};
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace

SuccessStats run_monte_carlo(const ExperimentConfig& cfg) {
    return run_monte_carlo(cfg, load_case(cfg.case_path));
}

SuccessStats run_monte_carlo(const ExperimentConfig& cfg, NetworkModel net) {
    cfg.validate();
    CaseContext ctx(std::move(net), cfg.pmu.rate_hz);

    SuccessStats stats;
    // threshold from the base campaign unless pinned
    if (cfg.bdd.fixed_gamma > 0) {
        stats.gamma = cfg.bdd.fixed_gamma;
    } else {
        std::vector<double> base(cfg.bdd.base_trials);
        parallel_for(cfg.bdd.base_trials, cfg.workers, [&](int i) {
            base[i] = base_case_residual(cfg, ctx, split_seed(cfg.master_seed ^ 0x9e37ULL, i));
        });
        stats.gamma = select_threshold(base, cfg.bdd.quantile);
    }

    std::optional<RegionParams> shared;
    if (cfg.reuse_estimate && !cfg.use_true_params) {
        TrialResult first = run_trial(cfg, ctx, split_seed(cfg.master_seed, 0));
        if (!first.error.empty())
            throw std::runtime_error("shared parameter estimation failed: " + first.error);
        shared = first.params_used;
    }

    stats.results.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](int i) {
        TrialResult r = run_trial(cfg, ctx, split_seed(cfg.master_seed, i),
                                  shared ? &*shared : nullptr);
        r.bypassed = r.error.empty() && r.r_post < stats.gamma;
        stats.results[i] = std::move(r);
    });

    stats.trials = cfg.trials;
    int ok = 0;
    for (const TrialResult& r : stats.results) {
        if (!r.error.empty()) ++stats.failed_trials;
        if (r.bypassed) ++ok;
    }
    stats.p_bypass = static_cast<double>(ok) / cfg.trials;
    std::tie(stats.ci_lo, stats.ci_hi) = wilson_interval(ok, cfg.trials);
    return stats;
}

void export_results(const SuccessStats& stats, const std::string& json_path,
                    const std::string& csv_path) {
    json doc;
    doc["schema_version"] = 1;
    doc["p_bypass"] = stats.p_bypass;
    doc["ci_95"] = {stats.ci_lo, stats.ci_hi};
    doc["gamma"] = stats.gamma;
    doc["trials"] = stats.trials;
    doc["failed_trials"] = stats.failed_trials;
    doc["results"] = json::array();
    for (const TrialResult& r : stats.results) {
        doc["results"].push_back({{"seed", r.seed},
                                  {"r_pre", r.r_pre},
                                  {"r_post", r.r_post},
                                  {"bypassed", r.bypassed},
                                  {"v_err", r.v_err},
                                  {"delta_err", r.delta_err},
                                  {"error", r.error}});
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error("cannot write " + json_path);
        out << doc.dump(2) << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << "seed,r_pre,r_post,bypassed,v_err,delta_err\n";
        out.precision(12);
        for (const TrialResult& r : stats.results)
            out << r.seed << ',' << r.r_pre << ',' << r.r_post << ',' << (r.bypassed ? 1 : 0)
                << ',' << r.v_err << ',' << r.delta_err << "\n";
    }
}

SuccessStats import_results(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot read " + json_path);
    json doc = json::parse(in);
    SuccessStats s;
    s.p_bypass = doc.at("p_bypass").get<double>();
    s.ci_lo = doc.at("ci_95")[0].get<double>();
    s.ci_hi = doc.at("ci_95")[1].get<double>();
    s.gamma = doc.at("gamma").get<double>();
    s.trials = doc.at("trials").get<int>();
    s.failed_trials = doc.at("failed_trials").get<int>();
    for (const auto& jr : doc.at("results")) {
        TrialResult r;
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.r_pre = jr.at("r_pre").get<double>();
        r.r_post = jr.at("r_post").get<double>();
        r.bypassed = jr.at("bypassed").get<bool>();
        r.v_err = jr.at("v_err").get<double>();
        r.delta_err = jr.at("delta_err").get<double>();
        r.error = jr.at("error").get<std::string>();
        s.results.push_back(std::move(r));
    }
    return s;
}

namespace {

PmuNoiseSpec::Mode noise_mode_from_string(const std::string& s) {
    if (s == "none") return PmuNoiseSpec::Mode::None;
    if (s == "state_change_relative") return PmuNoiseSpec::Mode::StateChangeRelative;
    if (s == "tve") return PmuNoiseSpec::Mode::Tve;
    throw std::invalid_argument("unknown pmu noise mode '" + s + "'");
}

std::string noise_mode_to_string(PmuNoiseSpec::Mode m) {
    switch (m) {
        case PmuNoiseSpec::Mode::None: return "none";
        case PmuNoiseSpec::Mode::StateChangeRelative: return "state_change_relative";
        default: return "tve";
    }
}

EstimationMethod method_from_string(const std::string& s) {
    if (s == "gauss_newton") return EstimationMethod::GaussNewton;
    if (s == "dishonest_gauss_newton") return EstimationMethod::DishonestGaussNewton;
    if (s == "mes") return EstimationMethod::Mes;
    throw std::invalid_argument("unknown estimator method '" + s + "'");
}

std::string method_to_string(EstimationMethod m) {
    switch (m) {
        case EstimationMethod::GaussNewton: return "gauss_newton";
        case EstimationMethod::DishonestGaussNewton: return "dishonest_gauss_newton";
        default: return "mes";
    }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json doc = json::parse(text);
    ExperimentConfig cfg;
    cfg.case_path = doc.value("case_path", cfg.case_path);
    cfg.target_bus = doc.value("target_bus", cfg.target_bus);
    if (doc.contains("attack")) {
        const json& a = doc["attack"];
        if (a.contains("v_factor")) cfg.attack.v_factor = a["v_factor"].get<double>();
        if (a.contains("v_abs")) cfg.attack.v_abs = a["v_abs"].get<double>();
        if (a.contains("delta_deg_abs"))
            cfg.attack.delta_abs_deg = a["delta_deg_abs"].get<double>();
        if (a.contains("delta_deg_offset"))
            cfg.attack.delta_offset_deg = a["delta_deg_offset"].get<double>();
    }
    if (doc.contains("sim")) {
        const json& s = doc["sim"];
        if (s.contains("engine")) {
            const std::string e = s["engine"].get<std::string>();
            if (e == "linear") cfg.sim.engine = SimEngine::Linear;
            else if (e == "nonlinear") cfg.sim.engine = SimEngine::Nonlinear;
            else throw std::invalid_argument("unknown sim engine '" + e + "'");
        }
        cfg.sim.duration_s = s.value("duration_s", cfg.sim.duration_s);
        cfg.sim.dt_s = s.value("dt_s", cfg.sim.dt_s);
    }
    if (doc.contains("pmu")) {
        const json& p = doc["pmu"];
        cfg.pmu.rate_hz = p.value("rate_hz", cfg.pmu.rate_hz);
        cfg.pmu.n_samples = p.value("n_samples", cfg.pmu.n_samples);
        cfg.pmu.n_small = p.value("n_small", cfg.pmu.n_small);
        if (p.contains("noise_mode"))
            cfg.pmu.noise.mode = noise_mode_from_string(p["noise_mode"].get<std::string>());
        cfg.pmu.noise.level = p.value("noise_level", cfg.pmu.noise.level);
    }
    cfg.lag_seconds = doc.value("lag_seconds", cfg.lag_seconds);
    cfg.rtu_noise_std = doc.value("rtu_noise_std", cfg.rtu_noise_std);
    if (doc.contains("estimator")) {
        const json& e = doc["estimator"];
        if (e.contains("method"))
            cfg.estimator.method = method_from_string(e["method"].get<std::string>());
        cfg.estimator.tol_step = e.value("tol_step", cfg.estimator.tol_step);
        cfg.estimator.max_iter = e.value("max_iter", cfg.estimator.max_iter);
        cfg.estimator.mes_window = e.value("mes_window", cfg.estimator.mes_window);
        cfg.estimator.include_pmu = e.value("include_pmu", cfg.estimator.include_pmu);
        cfg.estimator.pmu_weight = e.value("pmu_weight", cfg.estimator.pmu_weight);
        if (e.contains("pmu_buses"))
            cfg.defender_pmu_buses = e["pmu_buses"].get<std::vector<int>>();
    }
    if (doc.contains("bdd")) {
        const json& b = doc["bdd"];
        cfg.bdd.quantile = b.value("quantile", cfg.bdd.quantile);
        cfg.bdd.base_trials = b.value("base_trials", cfg.bdd.base_trials);
        cfg.bdd.fixed_gamma = b.value("fixed_gamma", cfg.bdd.fixed_gamma);
    }
    cfg.trials = doc.value("trials", cfg.trials);
    cfg.master_seed = doc.value("master_seed", cfg.master_seed);
    cfg.use_true_params = doc.value("use_true_params", cfg.use_true_params);
    cfg.reuse_estimate = doc.value("reuse_estimate", cfg.reuse_estimate);
    cfg.workers = doc.value("workers", cfg.workers);
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["case_path"] = cfg.case_path;
    doc["target_bus"] = cfg.target_bus;
    json a = json::object();
    if (cfg.attack.v_factor) a["v_factor"] = *cfg.attack.v_factor;
    if (cfg.attack.v_abs) a["v_abs"] = *cfg.attack.v_abs;
    if (cfg.attack.delta_abs_deg) a["delta_deg_abs"] = *cfg.attack.delta_abs_deg;
    if (cfg.attack.delta_offset_deg) a["delta_deg_offset"] = *cfg.attack.delta_offset_deg;
    doc["attack"] = a;
    doc["sim"] = {{"engine", cfg.sim.engine == SimEngine::Linear ? "linear" : "nonlinear"},
                  {"duration_s", cfg.sim.duration_s},
                  {"dt_s", cfg.sim.dt_s}};
    doc["pmu"] = {{"rate_hz", cfg.pmu.rate_hz},
                  {"n_samples", cfg.pmu.n_samples},
                  {"n_small", cfg.pmu.n_small},
                  {"noise_mode", noise_mode_to_string(cfg.pmu.noise.mode)},
                  {"noise_level", cfg.pmu.noise.level}};
    doc["lag_seconds"] = cfg.lag_seconds;
    doc["rtu_noise_std"] = cfg.rtu_noise_std;
    doc["estimator"] = {{"method", method_to_string(cfg.estimator.method)},
                        {"tol_step", cfg.estimator.tol_step},
                        {"max_iter", cfg.estimator.max_iter},
                        {"mes_window", cfg.estimator.mes_window},
                        {"include_pmu", cfg.estimator.include_pmu},
                        {"pmu_weight", cfg.estimator.pmu_weight},
                        {"pmu_buses", cfg.defender_pmu_buses}};
    doc["bdd"] = {{"quantile", cfg.bdd.quantile},
                  {"base_trials", cfg.bdd.base_trials},
                  {"fixed_gamma", cfg.bdd.fixed_gamma}};
    doc["trials"] = cfg.trials;
    doc["master_seed"] = cfg.master_seed;
    doc["use_true_params"] = cfg.use_true_params;
    doc["reuse_estimate"] = cfg.reuse_estimate;
    doc["workers"] = cfg.workers;
    return doc.dump(2);
}

}  // namespace fdia
