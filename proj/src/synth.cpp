#include "vflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"
#include "vflow/rng.hpp"

namespace vflow::synth {

namespace {

// Stream tags; adding a stream must not disturb existing ones.
enum Stream : std::uint64_t {
    kBgTimes = 1,
    kBgSizes,
    kBgCountries,
    kBgAdvertisers,
    kBgPayments,
    kInjTimes,
    kInjGaps,
    kInjSizes,
    kInjCountries,
    kRateWalk,
    kPanelUnitFx,
    kPanelWeekFx,
    kPanelNoise,
};

std::size_t pick_weighted(Rng& rng, const std::vector<double>& cum) {
    const double u = rng.uniform() * cum.back();
    return static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

const char* kPayments[] = {"bank-transfer", "gift-card", "cash-deposit", "online-wallet"};

}  // namespace

void LedgerConfig::validate() const {
    require(horizon_seconds > 0, "synth.ledger: horizon must be positive");
    require(n_background + n_injected_pairs > 0, "synth.ledger: empty ledger requested");
    require(!country_mix.empty(), "synth.ledger: country mix is empty");
    for (const auto& [code, wt] : country_mix) {
        require(!code.empty(), "synth.ledger: empty country code in mix");
        require(wt > 0, "synth.ledger: non-positive weight for ", code);
    }
    require(tail_weight >= 0 && tail_weight <= 1, "synth.ledger: tail weight outside [0, 1]");
    require(tail_weight == 1.0 || !atoms.empty(),
            "synth.ledger: need size atoms unless the tail has full weight");
    for (const SizeAtom& a : atoms)
        require(a.satoshi > 0 && a.weight > 0, "synth.ledger: bad size atom");
    require(tail_min > 0 && tail_min <= tail_max, "synth.ledger: bad tail size range");
    require(base_rate_usd > 0, "synth.ledger: base rate must be positive");
    require(rate_daily_vol >= 0, "synth.ledger: negative rate volatility");
    if (n_injected_pairs > 0) {
        require(injected_min > 0 && injected_min <= injected_max,
                "synth.ledger: bad injected size range");
        require(injected_max < tail_min || injected_min > tail_max,
                "synth.ledger: injected sizes must not overlap the tail range");
        for (const SizeAtom& a : atoms)
            require(a.satoshi < injected_min || a.satoshi > injected_max,
                    "synth.ledger: injected sizes must not overlap atom ", a.satoshi);
        const auto span = static_cast<std::uint64_t>(injected_max - injected_min + 1);
        require(span >= 10 * static_cast<std::uint64_t>(n_injected_pairs),
                "synth.ledger: injected size space too small to guarantee uniqueness (span ",
                span, " for ", n_injected_pairs, " pairs)");
        require(max_pair_gap_seconds >= 1, "synth.ledger: pair gap must be at least 1 second");
        require(horizon_seconds > max_pair_gap_seconds,
                "synth.ledger: horizon shorter than the maximum pair gap");
    }
}

GeneratedLedger gen_ledger(const LedgerConfig& cfg) {
    cfg.validate();
    GeneratedLedger out;

    // Daily random-walk rate curve covering the horizon.
    {
        Rng rw(derive_stream(cfg.seed, kRateWalk));
        const std::int64_t days = cfg.horizon_seconds / kSecondsPerDay + 1;
        double rate = cfg.base_rate_usd;
        for (std::int64_t d = 0; d <= days; ++d) {
            out.rates.timestamps.push_back(cfg.start_timestamp + d * kSecondsPerDay);
            out.rates.usd_per_btc.push_back(rate);
            rate *= std::exp(cfg.rate_daily_vol * rw.normal());
        }
    }

    std::vector<double> country_cum;
    for (const auto& [code, wt] : cfg.country_mix)
        country_cum.push_back((country_cum.empty() ? 0.0 : country_cum.back()) + wt);

    std::vector<double> atom_cum;
    for (const SizeAtom& a : cfg.atoms)
        atom_cum.push_back((atom_cum.empty() ? 0.0 : atom_cum.back()) + a.weight);

    struct Draft {
        std::int64_t ts;
        std::int64_t size;
        std::size_t country;
        std::size_t advertiser;
        std::size_t payment;
        std::int64_t pair = -1;  // injected pair ordinal
    };
    std::vector<Draft> drafts;
    drafts.reserve(cfg.n_background + 2 * cfg.n_injected_pairs);

    {
        Rng rt(derive_stream(cfg.seed, kBgTimes));
        Rng rs(derive_stream(cfg.seed, kBgSizes));
        Rng rc(derive_stream(cfg.seed, kBgCountries));
        Rng ra(derive_stream(cfg.seed, kBgAdvertisers));
        Rng rp(derive_stream(cfg.seed, kBgPayments));
        const double log_lo = std::log(static_cast<double>(cfg.tail_min));
        const double log_hi = std::log(static_cast<double>(cfg.tail_max) + 1.0);
        for (std::size_t i = 0; i < cfg.n_background; ++i) {
            Draft d;
            d.ts = cfg.start_timestamp +
                   static_cast<std::int64_t>(rt.below(static_cast<std::uint64_t>(cfg.horizon_seconds)));
            if (rs.uniform() < cfg.tail_weight) {
                // Log-uniform tail, clamped into range after rounding.
                const double v = std::exp(rs.uniform_range(log_lo, log_hi));
                d.size = std::clamp(static_cast<std::int64_t>(v), cfg.tail_min, cfg.tail_max);
            } else {
                d.size = cfg.atoms[pick_weighted(rs, atom_cum)].satoshi;
            }
            d.country = pick_weighted(rc, country_cum);
            d.advertiser = pick_weighted(ra, country_cum);
            d.payment = rp.below(std::size(kPayments));
            drafts.push_back(d);
        }
    }

    if (cfg.n_injected_pairs > 0) {
        Rng rt(derive_stream(cfg.seed, kInjTimes));
        Rng rg(derive_stream(cfg.seed, kInjGaps));
        Rng rs(derive_stream(cfg.seed, kInjSizes));
        Rng rc(derive_stream(cfg.seed, kInjCountries));
        std::unordered_set<std::int64_t> used;
        for (std::size_t p = 0; p < cfg.n_injected_pairs; ++p) {
            std::int64_t size = 0;
            int attempts = 0;
            do {
                require(++attempts <= 1000,
                        "synth.ledger: could not find a unique injected size");
                size = rs.int_range(cfg.injected_min, cfg.injected_max);
            } while (!used.insert(size).second);
            const std::int64_t span = cfg.horizon_seconds - cfg.max_pair_gap_seconds;
            const std::int64_t t1 =
                cfg.start_timestamp + static_cast<std::int64_t>(rt.below(
                                          static_cast<std::uint64_t>(span)));
            const std::int64_t gap = rg.int_range(1, cfg.max_pair_gap_seconds);
            Draft leg;
            leg.size = size;
            leg.pair = static_cast<std::int64_t>(p);
            leg.payment = 0;
            leg.ts = t1;
            leg.country = pick_weighted(rc, country_cum);
            leg.advertiser = pick_weighted(rc, country_cum);
            drafts.push_back(leg);
            leg.ts = t1 + gap;
            leg.country = pick_weighted(rc, country_cum);
            leg.advertiser = pick_weighted(rc, country_cum);
            drafts.push_back(leg);
        }

        // The disjoint ranges above make collisions impossible; verify against
        // the ledger anyway so a config mistake cannot silently break truth.
        std::unordered_set<std::int64_t> background_sizes;
        for (const Draft& d : drafts)
            if (d.pair < 0) background_sizes.insert(d.size);
        for (const std::int64_t s : used)
            require(!background_sizes.count(s),
                    "synth.ledger: injected size ", s, " collides with a background trade");
    }

    std::stable_sort(drafts.begin(), drafts.end(),
                     [](const Draft& a, const Draft& b) { return a.ts < b.ts; });

    out.trades.reserve(drafts.size());
    std::vector<std::pair<std::string, std::string>> pair_ids(cfg.n_injected_pairs);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        const Draft& d = drafts[i];
        ingest::TradeRecord t;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "T%08zu", i + 1);
        t.trade_id = idbuf;
        t.timestamp = d.ts;
        t.size_satoshi = d.size;
        t.fiat_currency = "USD";
        const auto day = static_cast<std::size_t>((d.ts - cfg.start_timestamp) / kSecondsPerDay);
        t.fiat_price = out.rates.usd_per_btc[day];
        t.user_country = cfg.country_mix[d.country].first;
        t.advertiser_country = cfg.country_mix[d.advertiser].first;
        t.payment_method = kPayments[d.payment];
        out.trades.push_back(std::move(t));
        if (d.pair >= 0) {
            auto& ids = pair_ids[static_cast<std::size_t>(d.pair)];
            (ids.first.empty() ? ids.first : ids.second) = out.trades.back().trade_id;
        }
    }
    out.truth.reserve(cfg.n_injected_pairs);
    for (const auto& [a, b] : pair_ids) out.truth.push_back({a, b});
    std::sort(out.truth.begin(), out.truth.end(),
              [](const InjectedPair& x, const InjectedPair& y) { return x.leg1_id < y.leg1_id; });
    return out;
}

std::string write_truth(const std::vector<InjectedPair>& truth) {
    std::string out = "leg1_id,leg2_id\n";
    for (const InjectedPair& p : truth) {
        out += p.leg1_id;
        out += ',';
        out += p.leg2_id;
        out += '\n';
    }
    return out;
}

std::vector<InjectedPair> parse_truth(const std::string& text) {
    std::vector<InjectedPair> out;
    const auto lines = split_lines(text);
    std::size_t first = 0;
    if (!lines.empty() && lines[0] == "leg1_id,leg2_id") first = 1;
    for (std::size_t li = first; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto f = split_csv(lines[li]);
        require(f.size() == 2, "synth.parse_truth: line ", li + 1, ": expected 2 columns");
        out.push_back({f[0], f[1]});
    }
    return out;
}

void PanelDGP::validate() const {
    require(n_units >= 2, "synth.panel: need at least two units");
    require(n_weeks >= 2, "synth.panel: need at least two weeks");
    require(treated_unit < n_units, "synth.panel: treated unit out of range");
    require(first_treated_week >= 1 && first_treated_week < n_weeks,
            "synth.panel: first treated week must leave a pre-period");
    require(week_start_sunday(first_week_start) == first_week_start,
            "synth.panel: first_week_start must be a Sunday midnight");
    require(unit_effect_min <= unit_effect_max && week_effect_min <= week_effect_max,
            "synth.panel: bad effect ranges");
}

GeneratedPanel gen_panel(const PanelDGP& dgp) {
    dgp.validate();
    Rng ru(derive_stream(dgp.seed, kPanelUnitFx));
    Rng rw(derive_stream(dgp.seed, kPanelWeekFx));
    Rng rn(derive_stream(dgp.seed, kPanelNoise));

    std::vector<double> a(dgp.n_units), b(dgp.n_weeks);
    for (double& v : a) v = ru.uniform_range(dgp.unit_effect_min, dgp.unit_effect_max);
    for (double& v : b) v = rw.uniform_range(dgp.week_effect_min, dgp.week_effect_max);

    GeneratedPanel gp;
    gp.true_beta = dgp.true_beta;
    gp.panel.measure = panel::Measure::OutflowUSD;
    gp.panel.filter = panel::CounterpartyFilter::All;
    for (std::size_t i = 0; i < dgp.n_units; ++i) {
        char label[8];
        std::snprintf(label, sizeof label, "U%03zu", i);
        gp.panel.countries.emplace_back(label);
    }
    gp.treated = gp.panel.countries[dgp.treated_unit];
    for (std::size_t w = 0; w < dgp.n_weeks; ++w)
        gp.panel.week_starts.push_back(dgp.first_week_start +
                                       static_cast<std::int64_t>(w) * kSecondsPerWeek);
    // A Thursday inside the first treated week, like a real disbursement date.
    gp.disbursement_date = gp.panel.week_starts[dgp.first_treated_week] + 4 * kSecondsPerDay;

    gp.panel.values.resize(static_cast<Eigen::Index>(dgp.n_units),
                           static_cast<Eigen::Index>(dgp.n_weeks));
    for (std::size_t i = 0; i < dgp.n_units; ++i)
        for (std::size_t w = 0; w < dgp.n_weeks; ++w) {
            const bool dosed = i == dgp.treated_unit && w >= dgp.first_treated_week;
            const double eta = a[i] + b[w] + (dosed ? dgp.true_beta : 0.0);
            require(eta < 700.0, "synth.panel: mean overflows at unit ", i, " week ", w);
            const double mean = std::exp(eta);
            gp.panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) =
                dgp.poisson_noise ? static_cast<double>(rn.poisson(mean)) : mean;
        }
    return gp;
}

}  // namespace vflow::synth
