// Wall-clock comparison of the parallel kernels against their serial
// references on synthetic inputs. Build with `cmake --build build --target
// vflow_bench`; output is plain text, one line per measurement.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "vflow/calendar.hpp"
#include "vflow/matcher.hpp"
#include "vflow/sdid.hpp"
#include "vflow/synth.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double run_timed(F&& fn) {
    const auto t0 = clock_type::now();
    fn();
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void line(const std::string& label, double serial_s, double parallel_s) {
    std::cout << std::left << std::setw(34) << label << "serial " << std::setw(9) << std::fixed
              << std::setprecision(3) << serial_s << "s  parallel " << std::setw(9) << parallel_s
              << "s  speedup " << std::setprecision(2) << (serial_s / parallel_s) << "x\n";
}

void bench_matcher(std::size_t n_trades) {
    vflow::synth::LedgerConfig cfg;
    cfg.n_background = n_trades - 200;
    cfg.n_injected_pairs = 100;
    cfg.start_timestamp = vflow::parse_date("2020-01-01");
    cfg.horizon_seconds = 180 * vflow::kSecondsPerDay;
    cfg.country_mix = {{"US", 0.5}, {"NG", 0.3}, {"GB", 0.2}};
    cfg.atoms = {{100000, 0.4}, {1000000, 0.3}, {10000000, 0.1}};
    cfg.injected_min = 60000000;
    cfg.injected_max = 90000000;
    cfg.seed = 99;
    const vflow::synth::GeneratedLedger lg = vflow::synth::gen_ledger(cfg);

    const vflow::matcher::MatchParams params;
    std::size_t pairs = 0;
    const double serial_s = run_timed([&] {
        pairs = vflow::matcher::scan_matches_serial(lg.trades, params, lg.rates).size();
    });
    const double parallel_s = run_timed([&] {
        pairs = vflow::matcher::scan_matches(lg.trades, params, lg.rates).size();
    });
    line("matcher " + std::to_string(n_trades) + " trades (" + std::to_string(pairs) + " pairs)",
         serial_s, parallel_s);
}

void bench_placebo(std::size_t reps) {
    vflow::Rng rng(5);
    vflow::sdid::SdidProblem p;
    const Eigen::Index n = 40, T = 30;
    for (Eigen::Index i = 0; i < n; ++i) p.units.push_back("U" + std::to_string(i));
    for (Eigen::Index t = 0; t < T; ++t)
        p.week_starts.push_back(vflow::parse_date("2020-01-05") + t * vflow::kSecondsPerWeek);
    p.Y.resize(n, T);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index t = 0; t < T; ++t)
            p.Y(i, t) = 10.0 + 0.5 * double(i) + 0.2 * double(t) + rng.uniform_range(0.0, 3.0);
    p.treated = 0;
    p.t_pre = 20;

    const double serial_s =
        run_timed([&] { vflow::sdid::placebo_variance(p, reps, 11, /*parallel=*/false); });
    const double parallel_s =
        run_timed([&] { vflow::sdid::placebo_variance(p, reps, 11, /*parallel=*/true); });
    line("placebo variance " + std::to_string(reps) + " reps", serial_s, parallel_s);
}

}  // namespace

int main() {
    for (std::size_t n : {std::size_t(10000), std::size_t(50000), std::size_t(200000)})
        bench_matcher(n);
    bench_placebo(200);
    bench_placebo(1000);
    return 0;
}
