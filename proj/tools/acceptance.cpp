// Acceptance gate. Each numbered criterion prints exactly one [PASS]/[FAIL]
// line with the measured quantities; the final criterion needs a proprietary
// input and is printed as [SKIP]. Exit status is the number of failed
// runnable criteria, so CI can run this binary directly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vflow/calendar.hpp"
#include "vflow/cli.hpp"
#include "vflow/econ.hpp"
#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"
#include "vflow/panel.hpp"
#include "vflow/rng.hpp"
#include "vflow/sdid.hpp"
#include "vflow/spillover.hpp"
#include "vflow/synth.hpp"

namespace {

using vflow::Rng;
namespace matcher = vflow::matcher;
namespace synth = vflow::synth;
namespace econ = vflow::econ;
namespace sdid = vflow::sdid;
namespace spill = vflow::spillover;
namespace panel = vflow::panel;
namespace cli = vflow::cli;

int g_failed = 0;

void report(int n, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << detail << "\n";
    if (!pass) ++g_failed;
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Size mixture with a few heavily repeated sizes (coincidences frequent, the
// probability test must suppress them) and many lightly repeated ones
// (borderline coincidences the test should still emit).
std::vector<synth::SizeAtom> tiered_atoms() {
    std::vector<synth::SizeAtom> atoms;
    for (int k = 1; k <= 5; ++k) atoms.push_back({1000000LL * k, 30.0});
    for (int k = 0; k < 70; ++k) atoms.push_back({105000LL + 10000LL * k, 1.0});
    return atoms;
}

// --- criterion 1: matcher equals the quadratic reference; big-ledger speed ---

void criterion1() {
    synth::LedgerConfig small;
    small.n_background = 4900;
    small.n_injected_pairs = 50;
    small.start_timestamp = vflow::parse_date("2020-01-01");
    small.horizon_seconds = 14 * vflow::kSecondsPerDay;
    small.country_mix = {{"US", 0.5}, {"NG", 0.3}, {"GB", 0.2}};
    small.atoms = tiered_atoms();
    small.tail_weight = 0.3;
    small.injected_min = 60000000;
    small.injected_max = 90000000;
    small.seed = 20260101;
    const synth::GeneratedLedger lg = synth::gen_ledger(small);

    const matcher::MatchParams params;
    const std::vector<matcher::VehicleTrade> got = matcher::scan_matches(lg.trades, params, lg.rates);
    const std::vector<oracle::Pair> want = oracle::brute_force_matches(lg.trades, params);

    bool same = got.size() == want.size();
    double max_dp = 0.0;
    for (std::size_t k = 0; same && k < got.size(); ++k) {
        same = got[k].leg1.trade_id == lg.trades[want[k].i].trade_id &&
               got[k].leg2.trade_id == lg.trades[want[k].j].trade_id;
        max_dp = std::max(max_dp, std::abs(got[k].p_value - want[k].p) /
                                      std::max(std::abs(want[k].p), 1e-300));
    }
    same = same && max_dp <= 1e-12;

    synth::LedgerConfig big;
    big.n_background = 1000000;
    big.start_timestamp = vflow::parse_date("2020-01-01");
    big.horizon_seconds = 365 * vflow::kSecondsPerDay;
    big.country_mix = {{"US", 0.5}, {"NG", 0.3}, {"GB", 0.2}};
    big.atoms = {{100000, 0.4}, {1000000, 0.3}, {10000000, 0.1}};
    big.tail_weight = 0.2;
    big.seed = 7;
    const synth::GeneratedLedger lb = synth::gen_ledger(big);
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<matcher::VehicleTrade> fast = matcher::scan_matches(lb.trades, params, lb.rates);
    const double secs = seconds_since(t0);

    report(1, same && secs < 60.0,
           "matcher equals the quadratic reference on 5,000 trades (" + std::to_string(got.size()) +
               " vs " + std::to_string(want.size()) + " pairs, max relative p deviation " +
               fmt(max_dp, 3) + "); 1,000,000-trade scan emitted " + std::to_string(fast.size()) +
               " pairs in " + fmt(secs, 3) + " s (limit 60 s)");
}

// --- criterion 2: recall on injected pairs; null-ledger classification rate ---

void criterion2() {
    synth::LedgerConfig cfg;
    cfg.n_background = 50000;
    cfg.n_injected_pairs = 1000;
    cfg.start_timestamp = vflow::parse_date("2020-01-01");
    cfg.horizon_seconds = 365 * vflow::kSecondsPerDay;
    cfg.country_mix = {{"US", 0.5}, {"NG", 0.3}, {"GB", 0.2}};
    cfg.atoms = {{100000, 0.4}, {1000000, 0.3}, {10000000, 0.1}};
    cfg.tail_weight = 0.2;
    cfg.injected_min = 60000000;
    cfg.injected_max = 90000000;
    cfg.seed = 4242;
    const synth::GeneratedLedger lg = synth::gen_ledger(cfg);

    const matcher::MatchParams params;
    const std::vector<matcher::VehicleTrade> got = matcher::scan_matches(lg.trades, params, lg.rates);

    std::unordered_map<std::string, std::size_t> index;
    index.reserve(lg.trades.size());
    for (std::size_t i = 0; i < lg.trades.size(); ++i) index[lg.trades[i].trade_id] = i;
    std::unordered_set<std::string> emitted;
    emitted.reserve(got.size());
    for (const matcher::VehicleTrade& v : got)
        emitted.insert(v.leg1.trade_id + '\t' + v.leg2.trade_id);

    // The first burn_in trades only feed the size distribution and are never
    // tested, so recall is measured over pairs whose first leg lands after
    // that prefix; both counts are printed.
    std::size_t eligible = 0, hit = 0;
    for (const synth::InjectedPair& p : lg.truth) {
        if (index.at(p.leg1_id) < params.burn_in) continue;
        ++eligible;
        if (emitted.count(p.leg1_id + '\t' + p.leg2_id)) ++hit;
    }
    const double recall = eligible == 0 ? 0.0 : double(hit) / double(eligible);

    synth::LedgerConfig null_cfg;
    null_cfg.n_background = 2000;
    null_cfg.start_timestamp = vflow::parse_date("2020-01-01");
    null_cfg.horizon_seconds = 90 * vflow::kSecondsPerDay;
    null_cfg.country_mix = {{"US", 0.5}, {"NG", 0.3}, {"GB", 0.2}};
    null_cfg.atoms = tiered_atoms();
    null_cfg.tail_weight = 0.05;
    matcher::MatchParams null_params;
    null_params.burn_in = 500;

    std::vector<double> rate(100);
    for (int s = 0; s < 100; ++s) {
        null_cfg.seed = 1000 + static_cast<std::uint64_t>(s);
        const synth::GeneratedLedger ln = synth::gen_ledger(null_cfg);
        const std::vector<matcher::VehicleTrade> v =
            matcher::scan_matches(ln.trades, null_params, ln.rates);
        rate[s] = double(v.size()) / double(null_cfg.n_background - null_params.burn_in);
    }
    double mean = 0.0;
    for (double r : rate) mean += r;
    mean /= 100.0;
    double var = 0.0;
    for (double r : rate) var += (r - mean) * (r - mean);
    var /= 99.0;
    const double bound = 0.05 + 3.0 * std::sqrt(var / 100.0);

    report(2, recall >= 0.99 && mean <= bound,
           "recall " + fmt(recall, 6) + " (" + std::to_string(hit) + "/" + std::to_string(eligible) +
               " injected pairs whose first leg clears the burn-in prefix, of 1000 injected; "
               "floor 0.99); null vehicle-classification rate " +
               fmt(mean, 4) + " over 100 seeds (bound 0.05 + 3 MC-SE = " + fmt(bound, 4) + ")");
}

// --- criterion 3: noiseless fixed-effects recovery ---

synth::PanelDGP base_dgp() {
    synth::PanelDGP d;
    d.n_units = 59;
    d.n_weeks = 23;
    d.first_week_start = vflow::parse_date("2020-01-05");
    d.treated_unit = 0;
    d.first_treated_week = 13;
    d.true_beta = 0.163;
    return d;
}

void criterion3() {
    synth::PanelDGP d = base_dgp();
    d.poisson_noise = false;
    d.seed = 99;
    const synth::GeneratedPanel gp = synth::gen_panel(d);
    econ::TreatSpec t;
    t.treated = gp.treated;
    t.disbursement_date = gp.disbursement_date;
    const econ::FitResult fit = econ::fit_poisson_twfe(gp.panel, t);
    const double db = std::abs(fit.interaction_beta() - 0.163);
    const double theta = fit.theta(fit.interaction);
    report(3, db <= 1e-8 && std::abs(theta - 0.177) <= 5e-4,
           "noiseless 59x23 panel recovers the planted coefficient (|error| " + fmt(db, 3) +
               ", tolerance 1e-8); transformed effect " + fmt(theta, 6) + " vs 0.177");
}

// --- criterion 4: clustered-CI coverage under Poisson noise ---

// Calibration DGP: 59 units x 23 weeks, the first 29 units switch on at week
// 13 with a common multiplicative effect, Poisson noise everywhere. Treatment
// has to vary across many clusters here: with a lone treated cluster the
// estimator's own first-order conditions zero that cluster's score in the
// interaction coordinate, so the sandwich cannot see the variance that
// dominates the estimate and no nominal CI attains its coverage.
struct CoverageSim {
    panel::FlowPanel p;
    econ::TreatSpec t;
};

CoverageSim coverage_sim(std::uint64_t seed, double beta) {
    const std::size_t n_units = 59, n_weeks = 23, n_treated = 29, first_treated = 13;
    Rng rng(seed);
    CoverageSim s;
    s.p.values.resize(static_cast<Eigen::Index>(n_units), static_cast<Eigen::Index>(n_weeks));
    for (std::size_t i = 0; i < n_units; ++i) {
        char name[8];
        std::snprintf(name, sizeof name, "C%02zu", i);
        s.p.countries.emplace_back(name);
    }
    const std::int64_t first_week = vflow::parse_date("2020-01-05");
    for (std::size_t w = 0; w < n_weeks; ++w)
        s.p.week_starts.push_back(first_week +
                                  static_cast<std::int64_t>(w) * vflow::kSecondsPerWeek);
    std::vector<double> a(n_units), g(n_weeks);
    for (auto& v : a) v = rng.uniform_range(3.0, 5.0);
    for (auto& v : g) v = rng.uniform_range(-0.3, 0.3);
    for (std::size_t i = 0; i < n_units; ++i)
        for (std::size_t w = 0; w < n_weeks; ++w) {
            const bool on = i < n_treated && w >= first_treated;
            const double mean = std::exp(a[i] + g[w] + (on ? beta : 0.0));
            s.p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) =
                static_cast<double>(rng.poisson(mean));
        }
    s.t.treated = s.p.countries[0];
    s.t.disbursement_date = s.p.week_starts[first_treated];
    s.t.also_treated.assign(s.p.countries.begin() + 1, s.p.countries.begin() + n_treated);
    return s;
}

void criterion4() {
    const double z = 1.959963984540054;
    const double beta = std::log(1.114);
    const auto t0 = std::chrono::steady_clock::now();
    int covered = 0, errors = 0;
    const int reps = 500;
    for (int r = 0; r < reps; ++r) {
        try {
            const CoverageSim s =
                coverage_sim(vflow::derive_stream(20260404, static_cast<std::uint64_t>(r)), beta);
            const econ::FitResult fit = econ::fit_poisson_twfe(s.p, s.t);
            if (std::abs(fit.interaction_beta() - beta) <= z * fit.interaction_se()) ++covered;
        } catch (const std::exception&) {
            ++errors;  // a failed fit is a miss, not an excuse
        }
    }
    const double secs = seconds_since(t0);
    const double cov = 100.0 * covered / reps;
    report(4, cov >= 90.0 && cov <= 98.0 && secs < 300.0,
           "clustered 95% CI covered the known effect log(1.114) in " + fmt(cov, 4) + "% of " +
               std::to_string(reps) + " Poisson simulations, 59 units x 23 weeks, 29 treated "
               "(window [90%, 98%]; " +
               std::to_string(errors) + " failed fits counted as misses) in " + fmt(secs, 3) +
               " s (limit 300 s)");
}

// --- criterion 5: event-study reference week and two-period collapse ---

void criterion5() {
    synth::PanelDGP d;
    d.n_units = 6;
    d.n_weeks = 8;
    d.first_week_start = vflow::parse_date("2020-01-05");
    d.first_treated_week = 4;
    d.true_beta = 0.3;
    d.poisson_noise = true;
    d.seed = 31;
    const synth::GeneratedPanel gp = synth::gen_panel(d);
    econ::TreatSpec t;
    t.treated = gp.treated;
    t.disbursement_date = gp.disbursement_date;
    const econ::EventStudyResult es = econ::fit_event_study(gp.panel, t);
    Eigen::Index ref = -1;
    for (std::size_t w = 0; w < es.week_starts.size(); ++w)
        if (es.week_starts[w] == es.reference_week) ref = static_cast<Eigen::Index>(w);
    const bool ref_zero = ref >= 0 && es.beta(ref) == 0.0 && es.se(ref) == 0.0;

    synth::PanelDGP two = d;
    two.n_weeks = 2;
    two.first_treated_week = 1;
    two.true_beta = 0.25;
    two.seed = 77;
    const synth::GeneratedPanel g2 = synth::gen_panel(two);
    econ::TreatSpec t2;
    t2.treated = g2.treated;
    t2.disbursement_date = g2.disbursement_date;
    const econ::EventStudyResult es2 = econ::fit_event_study(g2.panel, t2);
    const econ::FitResult did = econ::fit_poisson_twfe(g2.panel, t2);
    const double db = std::abs(es2.beta(1) - did.interaction_beta());
    const double dse = std::abs(es2.se(1) - did.interaction_se());

    report(5, ref_zero && db <= 1e-8,
           std::string("reference-week coefficient and SE exactly zero: ") +
               (ref_zero ? "yes" : "no") + "; two-period event study equals the plain estimate "
               "(|d coef| " + fmt(db, 3) + ", tolerance 1e-8; |d se| " + fmt(dse, 3) + ")");
}

// --- criterion 6: simplex feasibility, collapses, placebo determinism ---

sdid::SdidProblem random_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index T,
                                 Eigen::Index t_pre) {
    Rng rng(seed);
    sdid::SdidProblem p;
    for (Eigen::Index i = 0; i < n; ++i) p.units.push_back("U" + std::to_string(i));
    for (Eigen::Index t = 0; t < T; ++t)
        p.week_starts.push_back(vflow::parse_date("2020-01-05") + t * vflow::kSecondsPerWeek);
    p.Y.resize(n, T);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index t = 0; t < T; ++t)
            p.Y(i, t) = 5.0 + 0.7 * double(i) + 0.3 * double(t) + rng.uniform_range(0.0, 2.0);
    p.treated = 0;
    p.t_pre = t_pre;
    return p;
}

sdid::SdidProblem common_trend_problem() {
    const double trend[8] = {3, 9, 1, 7, 5, 8, 2, 6};
    const double level[4] = {40, 55, 70, 85};
    sdid::SdidProblem p;
    p.units = {"T0", "C1", "C2", "C3", "C4"};
    for (Eigen::Index t = 0; t < 8; ++t)
        p.week_starts.push_back(vflow::parse_date("2020-01-05") + t * vflow::kSecondsPerWeek);
    p.Y.resize(5, 8);
    for (Eigen::Index t = 0; t < 8; ++t) {
        p.Y(0, t) = 60.0 + trend[t] + (t >= 5 ? 100.0 : 0.0);
        for (Eigen::Index c = 0; c < 4; ++c) p.Y(c + 1, t) = level[c] + trend[t];
    }
    p.treated = 0;
    p.t_pre = 5;
    return p;
}

void criterion6() {
    double worst_coord = 0.0, worst_sum = 0.0, worst_kkt = 0.0;
    const auto absorb = [&](const Eigen::VectorXd& w) {
        worst_coord = std::min(worst_coord, w.minCoeff());
        worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
    };

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (double ridge : {0.0, 0.37, 5.0}) {
            Rng rng(seed * 1000 + static_cast<std::uint64_t>(ridge * 100));
            Eigen::MatrixXd A(8, 5);
            Eigen::VectorXd b(8);
            for (Eigen::Index i = 0; i < 8; ++i) {
                b(i) = rng.uniform_range(-1.0, 2.0);
                for (Eigen::Index j = 0; j < 5; ++j) A(i, j) = rng.uniform_range(-1.0, 2.0);
            }
            sdid::SimplexSolveInfo info;
            absorb(sdid::solve_simplex_ls(A, b, ridge, &info));
            worst_kkt = std::max(worst_kkt, info.kkt_residual);
        }
    }
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const sdid::SdidResult r = sdid::estimate_sdid(random_problem(seed, 7, 10, 6));
        absorb(r.weights.omega);
        absorb(r.weights.lambda);
    }
    const bool feasible = worst_coord >= -1e-10 && worst_sum <= 1e-10 && worst_kkt <= 1e-8;

    // Uniform weights collapse to the four-mean difference estimate.
    const sdid::SdidProblem pu = random_problem(17, 6, 9, 5);
    const Eigen::VectorXd omega_u = Eigen::VectorXd::Constant(5, 1.0 / 5.0);
    const Eigen::VectorXd lambda_u = Eigen::VectorXd::Constant(5, 1.0 / 5.0);
    const double tau_u = sdid::tau_given_weights(pu, omega_u, lambda_u);
    long double tp = 0.0L, tq = 0.0L, cp = 0.0L, cq = 0.0L;
    for (Eigen::Index t = 0; t < 9; ++t) {
        const bool post = t >= 5;
        (post ? tq : tp) += pu.Y(0, t);
        for (Eigen::Index i = 1; i < 6; ++i) (post ? cq : cp) += pu.Y(i, t);
    }
    const double did = double((tq / 4.0L - tp / 5.0L) - (cq / (5.0L * 4.0L) - cp / (5.0L * 5.0L)));
    const double d_uniform = std::abs(tau_u - did);

    const sdid::SdidProblem pt = common_trend_problem();
    const sdid::SdidResult rt = sdid::estimate_sdid(pt);
    absorb(rt.weights.omega);
    absorb(rt.weights.lambda);
    const double d_delta = std::abs(rt.tau - 100.0);

    const sdid::SdidProblem pp = random_problem(23, 7, 9, 6);
    const sdid::PlaceboResult b1 = sdid::placebo_variance(pp, 40, 1234, true);
    const sdid::PlaceboResult b2 = sdid::placebo_variance(pp, 40, 1234, true);
    const sdid::PlaceboResult b3 = sdid::placebo_variance(pp, 40, 1234, false);
    const bool bits = b1.se == b2.se && b2.se == b3.se && b1.se_relative == b3.se_relative &&
                      (b1.path_se.array() == b2.path_se.array()).all() &&
                      (b2.path_se.array() == b3.path_se.array()).all();

    // End-to-end default: no --reps on the command line means 200 placebo
    // repetitions in the written table.
    fixtures::TempDir td("acceptance-sdid");
    panel::FlowPanel fp;
    fp.countries = pt.units;
    fp.week_starts = pt.week_starts;
    fp.values = pt.Y;
    panel::save_panel(td.file("panel.csv"), fp);
    const std::string disb = vflow::format_date(pt.week_starts[static_cast<std::size_t>(pt.t_pre)]);
    std::ostringstream out, err;
    const int rc = cli::run({"sdid", "--panel-file", td.file("panel.csv"), "--disbursement", disb,
                             "--seed", "4", "--out", td.file("out")},
                            out, err);
    std::string reps_field = "<missing>";
    double tau_cli = 0.0;
    if (rc == 0) {
        const std::vector<std::string> lines = split(read_file(td.file("out") + "/sdid.csv"), '\n');
        if (lines.size() >= 2) {
            const std::vector<std::string> f = split(lines[1], ',');
            if (f.size() == 6) {
                tau_cli = std::stod(f[0]);
                reps_field = f[5];
            }
        }
    }
    const bool cli_ok = rc == 0 && reps_field == "200" && std::abs(tau_cli - 100.0) <= 1e-6;

    report(6, feasible && d_uniform <= 1e-8 && d_delta <= 1e-6 && bits && cli_ok,
           "simplex weights feasible on every solve (worst coordinate " + fmt(worst_coord, 3) +
               ", worst |sum-1| " + fmt(worst_sum, 3) + ", worst KKT " + fmt(worst_kkt, 3) +
               "); |uniform-weight estimate - four-mean difference| " + fmt(d_uniform, 3) +
               "; common-trend effect error " + fmt(d_delta, 3) +
               "; placebo SE bit-identical across repeat and serial runs: " + (bits ? "yes" : "no") +
               "; command-line default placebo reps " + reps_field);
}

// --- criterion 7: counterfactual arithmetic and the scenario table ---

void criterion7() {
    const int T = 52, post0 = 26;
    std::vector<std::int64_t> weeks(T);
    std::vector<double> obs(T);
    Eigen::VectorXd beta(T);
    for (int t = 0; t < T; ++t) {
        weeks[t] = vflow::parse_date("2020-01-05") + std::int64_t(t) * vflow::kSecondsPerWeek;
        obs[t] = 100.0 + double((t * 37) % 53) + 0.25 * double(t);
        beta(t) = t >= post0 ? 0.2 + 0.01 * double(t - post0) : 0.5;  // pre values must be ignored
    }
    econ::EventStudyResult es;
    es.week_starts = weeks;
    es.beta = beta;
    es.se = Eigen::VectorXd::Zero(T);
    es.theta = beta.array().exp() - 1.0;
    es.theta_se = Eigen::VectorXd::Zero(T);
    es.reference_week = weeks[post0 - 1];
    es.disbursement_week = weeks[post0];

    const spill::CounterfactualSeries cf = spill::counterfactual_series(weeks, obs, es);
    const double got = spill::total_spillover_pct(cf);
    long double num = 0.0L, den = 0.0L;
    for (int t = 0; t < T; ++t) {
        den += obs[t];
        if (t >= post0) num += obs[t] * (1.0L - std::exp(-static_cast<long double>(beta(t))));
    }
    const double want = double(100.0L * num / den);
    const double d_closed = std::abs(got - want);

    const std::vector<spill::ScenarioRow> rows = spill::extrapolate(0.0127, spill::default_scenarios());
    const auto row = [&](const std::string& label) -> const spill::ScenarioRow& {
        for (const spill::ScenarioRow& r : rows)
            if (r.label == label) return r;
        throw std::runtime_error("scenario table is missing " + label);
    };
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    const spill::ScenarioRow& official = row("Official remittances");
    const spill::ScenarioRow& market = row("Total cryptocurrency market");
    const bool scen_ok = rel(official.spillover_usd, 847.1e6) <= 0.005 &&
                         rel(official.pct_of_eip, 0.312) <= 0.005 &&
                         rel(market.spillover_usd, 6.84e9) <= 0.005 &&
                         rel(market.pct_of_eip, 2.52) <= 0.005;

    report(7, d_closed <= 1e-6 && scen_ok,
           "counterfactual share matches the closed form (|d| " + fmt(d_closed, 3) +
               ", tolerance 1e-6); at share 1.27% the scenario table gives official remittances $" +
               fmt(official.spillover_usd / 1e6, 4) + "M / " + fmt(official.pct_of_eip, 3) +
               "% and total market $" + fmt(market.spillover_usd / 1e9, 3) + "B / " +
               fmt(market.pct_of_eip, 3) + "% (targets 847.1M / 0.312% and 6.84B / 2.52%, "
               "0.5% relative tolerance)");
}

void run_criterion(int n, void (*fn)()) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(n, false, std::string("unhandled error: ") + e.what());
    }
}

}  // namespace

int main() {
    run_criterion(1, criterion1);
    run_criterion(2, criterion2);
    run_criterion(3, criterion3);
    run_criterion(4, criterion4);
    run_criterion(5, criterion5);
    run_criterion(6, criterion6);
    run_criterion(7, criterion7);
    std::cout << "[SKIP] criterion 8: replication against the proprietary full trade ledger "
                 "(transformed estimates 0.114 / -0.072 / 0.177 / 0.158 and robustness values "
                 "0.1139 / 0.1141 within one reported SE; observation counts 1357/621/1265/1265 "
                 "exact). The input data cannot be shipped, so this is documented as a replication "
                 "target and excluded from the gate.\n";
    std::cout << "acceptance: " << (7 - g_failed) << " of 7 runnable criteria passed\n";
    return g_failed;
}
