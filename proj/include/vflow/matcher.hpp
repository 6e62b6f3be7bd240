#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vflow/ingest.hpp"

// Equal-size pair matching. A forward pass over the time-sorted ledger pairs
// each eligible trade with the earliest later unmatched trade of identical
// satoshi size inside the window; the pair is emitted as a vehicle trade only
// when the chance of such a coincidence under the running size distribution is
// at most alpha. Pairing consumes both legs either way, so a failed test still
// blocks its legs, exactly like the sequential description.

namespace vflow::matcher {

struct MatchParams {
    std::int64_t window_seconds = 18000;  // five hours
    double alpha = 0.05;
    std::size_t burn_in = 1000;  // trades that only feed the distribution

    void validate() const;
};

// Add-one-smoothed empirical size frequencies over all trades seen so far.
struct SizeDistribution {
    std::unordered_map<std::int64_t, std::int64_t> counts;
    std::int64_t total = 0;

    void add(std::int64_t size) {
        ++counts[size];
        ++total;
    }
};

// (count(size) + 1) / (total + 1); the distribution must have seen at least
// one trade.
double size_probability(std::int64_t size, const SizeDistribution& dist);

// Probability that at least one of n_window independent draws hits a
// size of probability p_i: 1 - (1 - p_i)^n_window.
double match_p_value(double p_i, std::int64_t n_window);

struct VehicleTrade {
    ingest::TradeRecord leg1;  // earlier leg; dates and locates the transfer
    ingest::TradeRecord leg2;
    double p_value = 1.0;
    std::string origin;       // leg1 user country
    std::string destination;  // leg2 user country
    double usd_value = 0.0;   // size at the leg1-time USD/BTC rate
};

enum class FlowKind { Domestic, CrossBorder };

struct FlowClass {
    FlowKind kind = FlowKind::Domestic;
    std::string origin;
    std::string destination;
};

// Domestic iff the two user countries are equal; empty country -> error.
FlowClass classify_flow(const VehicleTrade& v);

// Matching kernel. The ledger must be sorted by (timestamp, trade_id); the
// scan decomposes by satoshi size (legs of a pair always share a size, so
// greedy pairing is independent across size classes) and parallelizes over
// classes. Output is identical to scan_matches_serial for every input, pairs
// ordered by the position of leg1 in the ledger.
std::vector<VehicleTrade> scan_matches(const std::vector<ingest::TradeRecord>& ledger,
                                       const MatchParams& params,
                                       const ingest::RateTable& rates);

// Literal single-pass reference: running hash-map distribution, linear window
// search. Kept as the executable statement of the matching rule; the parallel
// kernel is tested against it.
std::vector<VehicleTrade> scan_matches_serial(const std::vector<ingest::TradeRecord>& ledger,
                                              const MatchParams& params,
                                              const ingest::RateTable& rates);

// Vehicle file rows: leg1_id,leg2_id,timestamp1,timestamp2,size_satoshi,
// p_value,origin,destination,usd_value.
std::string write_vehicles(const std::vector<VehicleTrade>& vehicles);
std::vector<VehicleTrade> parse_vehicles(const std::string& text);
std::vector<VehicleTrade> load_vehicles(const std::string& path);
void save_vehicles(const std::string& path, const std::vector<VehicleTrade>& vehicles);

}  // namespace vflow::matcher
