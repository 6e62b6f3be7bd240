#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vflow/ingest.hpp"
#include "vflow/panel.hpp"

// Synthetic data with known ground truth: ledgers carrying injected
// equal-size pairs, and country x week panels from an exponential
// fixed-effects law. Generators are pure functions of (config, seed): the
// same inputs reproduce byte-identical files on any platform.

namespace vflow::synth {

struct SizeAtom {
    std::int64_t satoshi = 0;
    double weight = 0.0;
};

struct LedgerConfig {
    std::size_t n_background = 10000;
    std::size_t n_injected_pairs = 0;
    std::int64_t start_timestamp = 0;          // ledger opens here
    std::int64_t horizon_seconds = 0;          // trades land in [start, start+horizon)
    std::vector<std::pair<std::string, double>> country_mix;  // weights, normalized
    std::vector<SizeAtom> atoms;               // round-number sizes
    double tail_weight = 0.2;                  // probability of a tail draw
    std::int64_t tail_min = 100000, tail_max = 50000000;  // log-uniform tail, satoshi
    std::int64_t injected_min = 0, injected_max = 0;  // disjoint unique-size range
    std::int64_t max_pair_gap_seconds = 3600;  // injected leg2 lag, uniform [1, max]
    double base_rate_usd = 9000.0;             // daily random-walk rate curve
    double rate_daily_vol = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

struct InjectedPair {
    std::string leg1_id;
    std::string leg2_id;
};

struct GeneratedLedger {
    std::vector<ingest::TradeRecord> trades;  // sorted, ids assigned in order
    ingest::RateTable rates;                  // daily curve covering the horizon
    std::vector<InjectedPair> truth;          // ledger order of leg1
};

// Background sizes come from the atom/tail mixture; injected pairs get sizes
// from [injected_min, injected_max] that collide with nothing else in the
// ledger (checked exhaustively; a too-small range is an error).
GeneratedLedger gen_ledger(const LedgerConfig& cfg);

std::string write_truth(const std::vector<InjectedPair>& truth);
std::vector<InjectedPair> parse_truth(const std::string& text);

struct PanelDGP {
    std::size_t n_units = 10;
    std::size_t n_weeks = 23;
    std::int64_t first_week_start = 0;  // must be a Sunday
    std::size_t treated_unit = 0;
    std::size_t first_treated_week = 12;
    double true_beta = 0.0;
    double unit_effect_min = 3.0, unit_effect_max = 6.0;
    double week_effect_min = -0.3, week_effect_max = 0.3;
    bool poisson_noise = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedPanel {
    panel::FlowPanel panel;  // countries are synthetic labels in unit order
    std::string treated;
    std::int64_t disbursement_date = 0;  // inside the first treated week
    double true_beta = 0.0;
};

// Y_it = exp(a_i + b_t + beta * D_it), exactly or Poisson-sampled around it.
GeneratedPanel gen_panel(const PanelDGP& dgp);

}  // namespace vflow::synth
