// Command-line front end: simulate | identify | attack | montecarlo | report.
// Exit codes: 0 ok, 2 validation error, 3 estimation failure, 4 attack
// synthesis failure, 1 anything else.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fdia/harness.hpp"
#include "fdia/rng.hpp"

namespace fs = std::filesystem;
using namespace fdia;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return config_from_json(read_file(path));
}

int cmd_simulate(const std::string& case_path, double duration, double dt,
                 std::uint64_t seed, const std::string& out) {
    if (duration <= 0) throw std::invalid_argument("duration must be positive");
    if (dt <= 0) throw std::invalid_argument("dt must be positive");
    NetworkModel net = load_case(case_path);
    Trajectory traj = simulate(net, duration, dt, seed);
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << "t,bus_id,v,delta\n";
    os.precision(10);
    for (int t = 0; t < traj.sample_count(); ++t) {
        const double time = traj.start_time + t * traj.dt;
        for (size_t b = 0; b < traj.bus_ids.size(); ++b)
            os << time << ',' << traj.bus_ids[b] << ',' << traj.vmag(t, b) << ','
               << traj.angle(t, b) << "\n";
    }
    std::cout << "wrote " << traj.sample_count() << " samples x " << traj.bus_ids.size()
              << " buses to " << out << "\n";
    return 0;
}

int cmd_identify(const ExperimentConfig& cfg_in, const std::string& out) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    NetworkModel net = load_case(cfg.case_path);
    CaseContext ctx(std::move(net), cfg.pmu.rate_hz);
    AttackRegion region = build_region(ctx.net(), cfg.target_bus);

    RegionParams params;
    if (cfg.use_true_params) {
        params = true_region_params(ctx.net(), region);
    } else {
        TrialResult trial = run_trial(cfg, ctx, cfg.master_seed);
        if (!trial.error.empty()) throw InferenceError(trial.error);
        params = trial.params_used;
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << region_params_to_json(params) << "\n";
    std::cout << "region of bus " << cfg.target_bus << ": {";
    for (int b : region.omega_a) std::cout << ' ' << b;
    std::cout << " }, parameters written to " << out << "\n";
    return 0;
}

int cmd_attack(const std::string& case_path, const std::string& params_path,
               int target, const AttackSpec& spec, const std::string& out) {
    NetworkModel net = load_case(case_path);
    AttackRegion region = build_region(net, target);
    RegionParams params = params_path.empty()
                              ? true_region_params(net, region)
                              : region_params_from_json(read_file(params_path));
    StateVector eq = solve_power_flow(net);
    PhasorMap base;
    std::map<int, PQ> base_inj;
    for (int bus : region.omega_a) {
        const int i = net.index_of(bus);
        base[bus] = {eq.vmag[i], eq.angle[i]};
        base_inj[bus] = power_injection(net, eq, bus);
    }
    Phasor tgt = base.at(target);
    if (spec.v_factor) tgt.v *= *spec.v_factor;
    if (spec.v_abs) tgt.v = *spec.v_abs;
    if (spec.delta_abs_deg) tgt.delta = *spec.delta_abs_deg * M_PI / 180.0;
    if (spec.delta_offset_deg) tgt.delta += *spec.delta_offset_deg * M_PI / 180.0;

    MaliciousState mal = complete_malicious_state(region, params, base, tgt);
    if (mal.target_out_of_bounds)
        std::cerr << "warning: requested target magnitude outside [0.5, 1.5] pu\n";
    AttackVector av = build_attack_vector(net, region, params, base, base_inj, mal.phasors);
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << attack_vector_to_json(av) << "\n";
    std::cout << "attack vector with " << av.rtu_deltas.size() << " RTU deltas written to "
              << out << "\n";
    for (const auto& [bus, ph] : mal.phasors)
        if (!region.omega_b.count(bus))
            std::cout << "  bus " << bus << " -> " << ph.v << " /_ "
                      << ph.delta * 180.0 / M_PI << " deg\n";
    return 0;
}

void write_histogram(const std::vector<double>& pre, const std::vector<double>& post,
                     const std::string& path) {
    if (pre.empty()) return;
    double lo = 1e300, hi = -1e300;
    for (double v : pre) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : post)
        if (std::isfinite(v)) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const int nbins = 40;
    const double w = (hi - lo) / nbins > 0 ? (hi - lo) / nbins : 1.0;
    std::vector<int> cpre(nbins, 0), cpost(nbins, 0);
    auto binof = [&](double v) {
        return std::min(nbins - 1, std::max(0, static_cast<int>((v - lo) / w)));
    };
    for (double v : pre) cpre[binof(v)]++;
    for (double v : post)
        if (std::isfinite(v)) cpost[binof(v)]++;
    std::ofstream os(path);
    os << "bin_lo,bin_hi,count_pre,count_post\n";
    for (int b = 0; b < nbins; ++b)
        os << lo + b * w << ',' << lo + (b + 1) * w << ',' << cpre[b] << ',' << cpost[b]
           << "\n";
}

int cmd_montecarlo(const ExperimentConfig& cfg_in, const std::string& out_dir,
                   const std::vector<double>& sweep_v, const std::vector<double>& sweep_d) {
    fs::create_directories(out_dir);
    if (!sweep_v.empty() || !sweep_d.empty()) {
        std::ofstream os(fs::path(out_dir) / "sweep.csv");
        os << "attack_v_factor,attack_delta_deg,p_bypass,ci_lo,ci_hi,gamma\n";
        auto run_one = [&](std::optional<double> vf, std::optional<double> dd) {
            ExperimentConfig cfg = cfg_in;
            cfg.attack = {};
            cfg.attack.v_factor = vf;
            cfg.attack.delta_abs_deg = dd;
            SuccessStats st = run_monte_carlo(cfg);
            os << (vf ? *vf : 1.0) << ',' << (dd ? *dd : 0.0) << ',' << st.p_bypass << ','
               << st.ci_lo << ',' << st.ci_hi << ',' << st.gamma << "\n";
            std::cout << "v_factor=" << (vf ? *vf : 1.0) << " delta=" << (dd ? *dd : 0.0)
                      << " deg: p_bypass=" << st.p_bypass << " gamma=" << st.gamma << "\n";
        };
        for (double vf : sweep_v) run_one(vf, std::nullopt);
        for (double dd : sweep_d) run_one(std::nullopt, dd);
        return 0;
    }
    SuccessStats st = run_monte_carlo(cfg_in);
    export_results(st, (fs::path(out_dir) / "summary.json").string(),
                   (fs::path(out_dir) / "trials.csv").string());
    std::vector<double> pre, post;
    for (const TrialResult& r : st.results) {
        pre.push_back(r.r_pre);
        post.push_back(r.r_post);
    }
    write_histogram(pre, post, (fs::path(out_dir) / "residual_histogram.csv").string());
    std::cout << "p_bypass = " << st.p_bypass << "  CI95 = [" << st.ci_lo << ", "
              << st.ci_hi << "]  gamma = " << st.gamma << "  failed = " << st.failed_trials
              << "/" << st.trials << "\n";
    return 0;
}

int cmd_report(const std::string& in_path) {
    SuccessStats st = import_results(in_path);
    std::cout << "trials: " << st.trials << "\nfailed: " << st.failed_trials
              << "\ngamma: " << st.gamma << "\np_bypass: " << st.p_bypass << "\nci95: ["
              << st.ci_lo << ", " << st.ci_hi << "]\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"False-data-injection study toolkit for AC state estimation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = ".", case_path, out_file, params_path, in_path;
    std::uint64_t seed = 1;
    int workers = 0, target = 28, trials = -1;
    double duration = 300.0, dt = 1.0 / 600.0;
    AttackSpec spec;
    std::vector<double> sweep_v, sweep_d;
    double vf = 0, vabs = 0, dabs = 1e300, doff = 1e300;
    bool use_true = false;

    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--workers", workers, "worker threads (0 = all cores)");

    auto* sim = app.add_subcommand("simulate", "integrate the stochastic dynamics");
    sim->add_option("--case", case_path, "case file (JSON)")->required();
    sim->add_option("--duration", duration, "seconds");
    sim->add_option("--dt", dt, "integration step, seconds");
    sim->add_option("--out", out_file, "trajectory CSV")->required();

    auto* ident = app.add_subcommand("identify", "estimate region parameters from PMU data");
    ident->add_option("--case", case_path, "case file (JSON)");
    ident->add_option("--target", target, "target bus id");
    ident->add_option("--out", out_file, "parameters JSON")->required();
    ident->add_flag("--use-true-params", use_true, "emit case ground truth");

    auto* atk = app.add_subcommand("attack", "build an attack vector");
    atk->add_option("--case", case_path, "case file (JSON)");
    atk->add_option("--params", params_path, "region parameters JSON (default: truth)");
    atk->add_option("--target", target, "target bus id");
    atk->add_option("--v-factor", vf, "target magnitude factor");
    atk->add_option("--v-abs", vabs, "target magnitude, pu");
    atk->add_option("--delta-abs", dabs, "target angle, degrees");
    atk->add_option("--delta-offset", doff, "target angle offset, degrees");
    atk->add_option("--out", out_file, "attack vector JSON")->required();

    auto* mc = app.add_subcommand("montecarlo", "run a bypass-probability campaign");
    mc->add_option("--trials", trials, "override trial count");
    mc->add_option("--sweep-v-factor", sweep_v, "magnitude-factor sweep")->delimiter(',');
    mc->add_option("--sweep-delta-abs", sweep_d, "absolute-angle sweep, degrees")
        ->delimiter(',');

    auto* rep = app.add_subcommand("report", "print a stored campaign summary");
    rep->add_option("--in", in_path, "summary JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(case_path, duration, dt, seed, out_file);
        if (ident->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            if (!case_path.empty()) cfg.case_path = case_path;
            if (ident->count("--target")) cfg.target_bus = target;
            if (app.count("--seed")) cfg.master_seed = seed;
            cfg.use_true_params = use_true;
            if (workers) cfg.workers = workers;
            return cmd_identify(cfg, out_file);
        }
        if (atk->parsed()) {
            if (atk->count("--v-factor")) spec.v_factor = vf;
            if (atk->count("--v-abs")) spec.v_abs = vabs;
            if (atk->count("--delta-abs")) spec.delta_abs_deg = dabs;
            if (atk->count("--delta-offset")) spec.delta_offset_deg = doff;
            return cmd_attack(case_path, params_path, target, spec, out_file);
        }
        if (mc->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            if (trials > 0) cfg.trials = trials;
            if (trials == 0) throw std::invalid_argument("trials must be >= 1");
            if (app.count("--seed")) cfg.master_seed = seed;
            if (workers) cfg.workers = workers;
            return cmd_montecarlo(cfg, out_dir, sweep_v, sweep_d);
        }
        if (rep->parsed()) return cmd_report(in_path);
    } catch (const CaseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const InferenceError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const AttackError& e) {
        std::cerr << "attack synthesis error: " << e.what() << "\n";
        return 4;
    } catch (const RegionError& e) {
        std::cerr << "attack synthesis error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
