#include "vflow/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <set>
#include <tuple>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/econ.hpp"
#include "vflow/fail.hpp"
#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"
#include "vflow/panel.hpp"
#include "vflow/sdid.hpp"
#include "vflow/spillover.hpp"
#include "vflow/synth.hpp"

namespace vflow::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// ---- typed config reads; every message names [section] key -----------------

std::string key_ctx(const std::string& sec, const std::string& key) {
    return "[" + sec + "] " + key;
}

double cfg_double(const Config& c, const std::string& sec, const std::string& key,
                  double fallback) {
    if (!c.has(sec, key)) return fallback;
    try {
        return parse_double_field(c.get(sec, key), key_ctx(sec, key));
    } catch (const std::runtime_error&) {
        fail("cli.config: ", key_ctx(sec, key), ": not a number: \"", c.get(sec, key), "\"");
    }
}

std::int64_t cfg_int(const Config& c, const std::string& sec, const std::string& key,
                     std::int64_t fallback) {
    if (!c.has(sec, key)) return fallback;
    try {
        return parse_int64_field(c.get(sec, key), key_ctx(sec, key));
    } catch (const std::runtime_error&) {
        fail("cli.config: ", key_ctx(sec, key), ": not an integer: \"", c.get(sec, key), "\"");
    }
}

bool cfg_bool(const Config& c, const std::string& sec, const std::string& key, bool fallback) {
    if (!c.has(sec, key)) return fallback;
    const std::string& v = c.get(sec, key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("cli.config: ", key_ctx(sec, key), ": expected true/false, got \"", v, "\"");
}

std::int64_t cfg_date(const Config& c, const std::string& sec, const std::string& key) {
    try {
        return parse_date(c.get(sec, key));
    } catch (const std::runtime_error& e) {
        fail("cli.config: ", key_ctx(sec, key), ": ", e.what());
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t semi = s.find(';', pos);
        if (semi == std::string::npos) semi = s.size();
        std::string item = trim(s.substr(pos, semi - pos));
        if (!item.empty()) out.push_back(std::move(item));
        pos = semi + 1;
    }
    return out;
}

// "US:0.74;NG:0.13" -> label/weight pairs.
std::vector<std::pair<std::string, double>> parse_weighted_list(const std::string& s,
                                                                const std::string& what) {
    std::vector<std::pair<std::string, double>> out;
    for (const std::string& item : split_list(s)) {
        const std::size_t colon = item.find(':');
        require(colon != std::string::npos && colon > 0 && colon + 1 < item.size(),
                "cli.config: ", what, ": expected label:weight, got \"", item, "\"");
        double w = 0;
        try {
            w = parse_double_field(trim(item.substr(colon + 1)), what);
        } catch (const std::runtime_error&) {
            fail("cli.config: ", what, ": bad weight in \"", item, "\"");
        }
        out.emplace_back(trim(item.substr(0, colon)), w);
    }
    return out;
}

// Unknown keys in a section the subcommand reads are config mistakes.
void check_keys(const Config& c, const std::string& sec,
                std::initializer_list<const char*> known) {
    auto it = c.sections.find(sec);
    if (it == c.sections.end()) return;
    for (const auto& [key, value] : it->second) {
        (void)value;
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            fail("cli.config: unknown key ", key_ctx(sec, key));
    }
}

void check_common(const Config& c) {
    check_keys(c, "paths", {"ledger", "rates", "classification", "vehicles", "panel",
                            "event_study", "out_dir"});
    check_keys(c, "run", {"seed"});
}

std::string out_dir(const Config& c) { return c.get_or("paths", "out_dir", "out"); }

std::string out_path(const Config& c, const std::string& name) {
    return (std::filesystem::path(out_dir(c)) / name).string();
}

std::uint64_t top_seed(const Config& c) {
    const std::int64_t s = cfg_int(c, "run", "seed", 0);
    require(s >= 0, "cli.config: [run] seed: must be non-negative");
    return static_cast<std::uint64_t>(s);
}

void write_artifact(const Config& c, const std::string& name, const std::string& content,
                    std::vector<std::string>& written) {
    std::filesystem::create_directories(out_dir(c));
    write_text_file(out_path(c, name), content);
    written.push_back(name);
}

void write_manifest(const Config& c, const std::string& subcommand,
                    std::vector<std::string>& written) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(c.canonical())));
    std::string m;
    m += "tool vflow ";
    m += kVersion;
    m += "\nsubcommand " + subcommand;
    m += "\nconfig_hash ";
    m += hash;
    m += "\nseed " + std::to_string(top_seed(c));
    for (const std::string& name : written) m += "\nartifact " + name;
    m += "\n";
    write_text_file(out_path(c, "manifest-" + subcommand + ".txt"), m);
}

void report(std::ostream& os, const Config& c, const std::vector<std::string>& written) {
    for (const std::string& name : written) os << "wrote " << out_path(c, name) << "\n";
}

// ---- shared builders -------------------------------------------------------

panel::PanelSpec panel_spec(const Config& c) {
    panel::PanelSpec spec;
    spec.direction = panel::direction_from_name(c.get_or("panel", "direction", "outflow"));
    spec.filter = panel::filter_from_name(c.get_or("panel", "filter", "all"));
    spec.window_start = cfg_date(c, "panel", "window_start");
    spec.window_end = cfg_date(c, "panel", "window_end");
    require(spec.window_start < spec.window_end,
            "cli.config: [panel] window_start must precede window_end");
    spec.treated = c.get("treat", "treated");
    spec.control_rule = panel::control_rule_from_name(c.get_or("panel", "control_rule", "high-income"));
    if (c.has("panel", "controls")) spec.custom_controls = split_list(c.get("panel", "controls"));
    if (c.has("panel", "exclude")) spec.exclusions = split_list(c.get("panel", "exclude"));
    return spec;
}

void check_panel_keys(const Config& c) {
    check_keys(c, "panel", {"direction", "filter", "measure", "window_start", "window_end",
                            "control_rule", "controls", "exclude"});
    check_keys(c, "treat", {"treated", "disbursement"});
}

econ::TreatSpec treat_spec(const Config& c, const std::string& fallback_treated = "") {
    econ::TreatSpec t;
    t.treated = fallback_treated.empty() ? c.get("treat", "treated")
                                         : c.get_or("treat", "treated", fallback_treated);
    t.disbursement_date = cfg_date(c, "treat", "disbursement");
    return t;
}

std::vector<matcher::VehicleTrade> load_vehicle_input(const Config& c) {
    return matcher::load_vehicles(c.get_or("paths", "vehicles", out_path(c, "vehicles.csv")));
}

panel::FlowPanel load_panel_input(const Config& c) {
    const std::string path = c.get_or("paths", "panel", out_path(c, "panel.csv"));
    const std::string text = read_text_file(path);
    require(text.find_first_not_of(" \t\r\n") != std::string::npos,
            "cli: empty panel file ", path);
    panel::FlowPanel p = panel::parse_panel(text);
    require(!p.countries.empty() && !p.week_starts.empty(), "cli: empty panel in ", path);
    return p;
}

constexpr panel::CounterpartyFilter kFilters[] = {
    panel::CounterpartyFilter::All, panel::CounterpartyFilter::Low,
    panel::CounterpartyFilter::Middle, panel::CounterpartyFilter::High};

std::string fmt(double v) { return format_double(v); }

// Four-column table, one statistic per row, mirroring the estimation layout
// used for counterparty-income splits.
std::string results_table(const std::vector<econ::FitResult>& fits,
                          const std::vector<std::string>& labels, bool with_theta) {
    std::string t = "statistic";
    for (const std::string& l : labels) t += "," + l;
    t += "\n";
    auto row = [&](const char* name, auto get) {
        t += name;
        for (const econ::FitResult& f : fits) t += "," + get(f);
        t += "\n";
    };
    if (with_theta) {
        row("theta", [](const econ::FitResult& f) { return fmt(f.theta(f.interaction)); });
        row("theta_se", [](const econ::FitResult& f) { return fmt(f.theta_se(f.interaction)); });
    }
    row("beta", [](const econ::FitResult& f) { return fmt(f.interaction_beta()); });
    row("beta_se", [](const econ::FitResult& f) { return fmt(f.interaction_se()); });
    row("observations", [](const econ::FitResult& f) { return std::to_string(f.n_obs); });
    row("clusters", [](const econ::FitResult& f) { return std::to_string(f.n_clusters); });
    row("dropped_units", [](const econ::FitResult& f) {
        std::string s;
        for (const std::string& u : f.dropped_units) s += (s.empty() ? "" : ";") + u;
        return s;
    });
    return t;
}

nlohmann::json fit_json(const econ::FitResult& f, bool with_theta) {
    nlohmann::json j;
    j["beta"] = f.interaction_beta();
    j["se"] = f.interaction_se();
    if (with_theta) {
        j["theta"] = f.theta(f.interaction);
        j["theta_se"] = f.theta_se(f.interaction);
    }
    j["observations"] = f.n_obs;
    j["clusters"] = f.n_clusters;
    j["iterations"] = f.iterations;
    j["deviance"] = f.deviance;
    j["dropped_units"] = f.dropped_units;
    nlohmann::json coefs = nlohmann::json::object();
    for (Eigen::Index k = 0; k < f.beta.size(); ++k) {
        coefs[f.coef_names[static_cast<std::size_t>(k)]] = {
            {"beta", f.beta(k)}, {"se", std::sqrt(f.vcov(k, k))}};
    }
    j["coefficients"] = std::move(coefs);
    return j;
}

// ---- subcommands -----------------------------------------------------------

void run_match(const Config& c, std::ostream& os) {
    check_common(c);
    check_keys(c, "match", {"window_hours", "alpha", "burn_in"});
    matcher::MatchParams params;
    params.window_seconds =
        static_cast<std::int64_t>(cfg_double(c, "match", "window_hours", 5.0) * 3600.0);
    params.alpha = cfg_double(c, "match", "alpha", params.alpha);
    params.burn_in = static_cast<std::size_t>(cfg_int(c, "match", "burn_in",
                                                      static_cast<std::int64_t>(params.burn_in)));
    params.validate();

    const auto ledger = ingest::load_ledger(c.get("paths", "ledger"));
    const auto rates = ingest::load_rates(c.get("paths", "rates"));
    const auto vehicles = matcher::scan_matches(ledger, params, rates);

    std::vector<std::string> written;
    write_artifact(c, "vehicles.csv", matcher::write_vehicles(vehicles), written);
    write_manifest(c, "match", written);
    os << "match: " << vehicles.size() << " vehicle trades from " << ledger.size()
       << " records\n";
    report(os, c, written);
}

void run_panel(const Config& c, std::ostream& os) {
    check_common(c);
    check_panel_keys(c);
    const panel::PanelSpec spec = panel_spec(c);
    const std::string measure = c.get_or("panel", "measure", "flow");
    require(measure == "flow" || measure == "size",
            "cli.config: [panel] measure: expected flow or size, got \"", measure, "\"");

    const auto cls = ingest::load_classification(c.get("paths", "classification"));
    const auto vehicles = load_vehicle_input(c);
    const panel::FlowPanel p = measure == "flow" ? panel::build_panel(vehicles, spec, cls)
                                                 : panel::build_size_panel(vehicles, spec, cls);

    std::vector<std::string> written;
    write_artifact(c, "panel.csv", panel::write_panel(p), written);
    write_manifest(c, "panel", written);
    os << "panel: " << p.countries.size() << " countries x " << p.week_starts.size()
       << " weeks\n";
    report(os, c, written);
}

void run_did(const Config& c, std::ostream& os) {
    check_common(c);
    check_panel_keys(c);
    std::vector<econ::FitResult> fits;
    std::vector<std::string> labels;
    if (c.has("paths", "panel")) {
        const panel::FlowPanel p = load_panel_input(c);
        fits.push_back(econ::fit_poisson_twfe(p, treat_spec(c, p.countries.front())));
        labels.emplace_back(panel::filter_name(p.filter));
    } else {
        panel::PanelSpec spec = panel_spec(c);
        const econ::TreatSpec treat = treat_spec(c);
        const auto cls = ingest::load_classification(c.get("paths", "classification"));
        const auto vehicles = load_vehicle_input(c);
        for (const auto f : kFilters) {
            spec.filter = f;
            fits.push_back(econ::fit_poisson_twfe(panel::build_panel(vehicles, spec, cls), treat));
            labels.emplace_back(panel::filter_name(f));
        }
    }
    std::vector<std::string> written;
    write_artifact(c, "did_table.csv", results_table(fits, labels, true), written);
    nlohmann::json j;
    for (std::size_t i = 0; i < fits.size(); ++i) j[labels[i]] = fit_json(fits[i], true);
    write_artifact(c, "did_results.json", j.dump(2) + "\n", written);
    write_manifest(c, "did", written);
    for (std::size_t i = 0; i < fits.size(); ++i)
        os << "did[" << labels[i] << "]: theta " << fmt(fits[i].theta(fits[i].interaction))
           << " (se " << fmt(fits[i].theta_se(fits[i].interaction)) << "), n "
           << fits[i].n_obs << "\n";
    report(os, c, written);
}

void run_event_study(const Config& c, std::ostream& os) {
    check_common(c);
    check_panel_keys(c);
    econ::EventStudyResult es;
    if (c.has("paths", "panel")) {
        const panel::FlowPanel p = load_panel_input(c);
        es = econ::fit_event_study(p, treat_spec(c, p.countries.front()));
    } else {
        const panel::PanelSpec spec = panel_spec(c);
        const econ::TreatSpec treat = treat_spec(c);
        const auto cls = ingest::load_classification(c.get("paths", "classification"));
        es = econ::fit_event_study(panel::build_panel(load_vehicle_input(c), spec, cls), treat);
    }
    std::vector<std::string> written;
    write_artifact(c, "event_study.csv", econ::write_event_study(es), written);
    write_manifest(c, "event-study", written);
    os << "event-study: " << es.week_starts.size() << " weeks, reference "
       << format_date(es.reference_week) << ", n " << es.n_obs << "\n";
    report(os, c, written);
}

void run_ols_size(const Config& c, std::ostream& os) {
    check_common(c);
    check_panel_keys(c);
    std::vector<econ::FitResult> fits;
    std::vector<std::string> labels;
    if (c.has("paths", "panel")) {
        const panel::FlowPanel p = load_panel_input(c);
        require(p.measure == panel::Measure::MeanTransactionSizeUSD,
                "cli.ols-size: panel file does not hold transaction sizes");
        fits.push_back(econ::fit_ols_twfe(p, treat_spec(c, p.countries.front())));
        labels.emplace_back(panel::filter_name(p.filter));
    } else {
        panel::PanelSpec spec = panel_spec(c);
        const econ::TreatSpec treat = treat_spec(c);
        const auto cls = ingest::load_classification(c.get("paths", "classification"));
        const auto vehicles = load_vehicle_input(c);
        for (const auto f : kFilters) {
            spec.filter = f;
            fits.push_back(
                econ::fit_ols_twfe(panel::build_size_panel(vehicles, spec, cls), treat));
            labels.emplace_back(panel::filter_name(f));
        }
    }
    std::vector<std::string> written;
    write_artifact(c, "size_table.csv", results_table(fits, labels, false), written);
    nlohmann::json j;
    for (std::size_t i = 0; i < fits.size(); ++i) j[labels[i]] = fit_json(fits[i], false);
    write_artifact(c, "size_results.json", j.dump(2) + "\n", written);
    write_manifest(c, "ols-size", written);
    for (std::size_t i = 0; i < fits.size(); ++i)
        os << "ols-size[" << labels[i] << "]: beta " << fmt(fits[i].interaction_beta())
           << " (se " << fmt(fits[i].interaction_se()) << "), n " << fits[i].n_obs << "\n";
    report(os, c, written);
}

sdid::SdidProblem sdid_problem(const Config& c, const panel::FlowPanel& p) {
    sdid::SdidProblem prob;
    prob.units = p.countries;
    prob.week_starts = p.week_starts;
    prob.Y = p.values;
    require(!prob.Y.hasNaN(), "cli.sdid: panel has missing cells");
    prob.treated = p.row_of(c.get_or("treat", "treated", p.countries.front()));
    const std::int64_t disb_week = week_start_sunday(cfg_date(c, "treat", "disbursement"));
    Eigen::Index t_pre = 0;
    while (t_pre < static_cast<Eigen::Index>(p.week_starts.size()) &&
           p.week_starts[static_cast<std::size_t>(t_pre)] < disb_week)
        ++t_pre;
    require(t_pre >= 1 && t_pre < static_cast<Eigen::Index>(p.week_starts.size()),
            "cli.sdid: disbursement week leaves no pre or no post period in the panel");
    prob.t_pre = t_pre;
    if (c.has("sdid", "zeta")) prob.zeta_override = cfg_double(c, "sdid", "zeta", 0.0);
    prob.validate();
    return prob;
}

void run_sdid(const Config& c, std::ostream& os) {
    check_common(c);
    check_keys(c, "treat", {"treated", "disbursement"});
    check_keys(c, "sdid", {"reps", "zeta"});
    const std::int64_t reps = cfg_int(c, "sdid", "reps", 200);
    require(reps >= 2, "cli.config: [sdid] reps: need at least 2");

    const panel::FlowPanel p = load_panel_input(c);
    const sdid::SdidProblem prob = sdid_problem(c, p);
    const sdid::SdidResult res = sdid::estimate_sdid(prob);
    const sdid::PlaceboResult pl =
        sdid::placebo_variance(prob, static_cast<std::size_t>(reps), top_seed(c));

    std::string tau = "tau,se,tau_relative,se_relative,pre_mean,placebo_reps\n";
    tau += fmt(res.tau) + "," + fmt(pl.se) + "," + fmt(res.tau_relative) + "," +
           fmt(pl.se_relative) + "," + fmt(res.pre_mean) + "," + std::to_string(pl.reps) + "\n";

    // Unit weights descending: the concentrated donors lead.
    std::vector<std::size_t> order;
    std::vector<std::string> controls;
    for (std::size_t i = 0; i < prob.units.size(); ++i)
        if (static_cast<Eigen::Index>(i) != prob.treated) controls.push_back(prob.units[i]);
    order.resize(controls.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = res.weights.omega(static_cast<Eigen::Index>(a));
        const double wb = res.weights.omega(static_cast<Eigen::Index>(b));
        if (wa != wb) return wa > wb;
        return controls[a] < controls[b];
    });
    std::string uw = "country,weight\n";
    for (const std::size_t i : order)
        uw += controls[i] + "," + fmt(res.weights.omega(static_cast<Eigen::Index>(i))) + "\n";
    std::string tw = "week_start,weight\n";
    for (Eigen::Index t = 0; t < prob.t_pre; ++t)
        tw += format_date(prob.week_starts[static_cast<std::size_t>(t)]) + "," +
              fmt(res.weights.lambda(t)) + "\n";

    std::vector<std::string> written;
    write_artifact(c, "sdid.csv", tau, written);
    write_artifact(c, "sdid_unit_weights.csv", uw, written);
    write_artifact(c, "sdid_time_weights.csv", tw, written);
    write_artifact(c, "sdid_effect_path.csv", sdid::write_effect_path(prob, res, &pl), written);
    write_manifest(c, "sdid", written);
    os << "sdid: tau " << fmt(res.tau) << " (se " << fmt(pl.se) << "), relative "
       << fmt(res.tau_relative) << " (se " << fmt(pl.se_relative) << ")\n";
    report(os, c, written);
}

void run_spillover(const Config& c, std::ostream& os) {
    check_common(c);
    check_keys(c, "treat", {"treated", "disbursement"});
    check_keys(c, "spillover", {"fraction", "eip_total"});
    const double eip = cfg_double(c, "spillover", "eip_total", spillover::kDefaultEipTotalUsd);

    const econ::EventStudyResult es =
        econ::load_event_study(c.get_or("paths", "event_study", out_path(c, "event_study.csv")));
    const panel::FlowPanel p = load_panel_input(c);
    const std::string treated = c.get_or("treat", "treated", p.countries.front());
    const Eigen::Index row = p.row_of(treated);
    std::vector<double> observed;
    for (Eigen::Index t = 0; t < p.values.cols(); ++t) {
        const double v = p.values(row, t);
        require(std::isfinite(v), "cli.spillover: missing cell for ", treated, " at week ",
                format_date(p.week_starts[static_cast<std::size_t>(t)]));
        observed.push_back(v);
    }

    const spillover::CounterfactualSeries cf =
        spillover::counterfactual_series(p.week_starts, observed, es);
    const double est_pct = spillover::total_spillover_pct(cf);
    const double fraction = c.has("spillover", "fraction")
                                ? cfg_double(c, "spillover", "fraction", 0.0)
                                : est_pct / 100.0;
    const auto rows = spillover::extrapolate(fraction, spillover::default_scenarios(), eip);

    std::vector<std::string> written;
    write_artifact(c, "counterfactual.csv", spillover::write_counterfactual(cf), written);
    write_artifact(c, "scenarios.csv", spillover::write_scenarios(rows), written);
    write_manifest(c, "spillover", written);
    os << "spillover: estimated " << fmt(est_pct) << "% of observed outflows; scenarios use "
       << fmt(fraction * 100.0) << "%\n";
    report(os, c, written);
}

void run_synth(const Config& c, std::ostream& os) {
    check_common(c);
    check_keys(c, "synth",
               {"mode", "n_background", "n_injected_pairs", "start", "horizon_days",
                "countries", "atoms", "tail_weight", "tail_min", "tail_max", "injected_min",
                "injected_max", "max_pair_gap_seconds", "base_rate", "rate_vol", "n_units",
                "n_weeks", "first_week", "treated_unit", "first_treated_week", "beta",
                "unit_effect_min", "unit_effect_max", "week_effect_min", "week_effect_max",
                "poisson_noise"});
    const std::string mode = c.get_or("synth", "mode", "ledger");
    std::vector<std::string> written;
    if (mode == "ledger") {
        synth::LedgerConfig lc;
        lc.n_background = static_cast<std::size_t>(cfg_int(c, "synth", "n_background", 10000));
        lc.n_injected_pairs =
            static_cast<std::size_t>(cfg_int(c, "synth", "n_injected_pairs", 0));
        lc.start_timestamp = cfg_date(c, "synth", "start");
        lc.horizon_seconds = cfg_int(c, "synth", "horizon_days", 365) * kSecondsPerDay;
        lc.country_mix = parse_weighted_list(
            c.get_or("synth", "countries", "US:0.5;NG:0.25;CN:0.25"), "[synth] countries");
        for (const auto& [label, weight] : parse_weighted_list(
                 c.get_or("synth", "atoms", "100000:0.4;1000000:0.3;10000000:0.1"),
                 "[synth] atoms"))
            lc.atoms.push_back(
                synth::SizeAtom{parse_int64_field(label, "[synth] atoms"), weight});
        lc.tail_weight = cfg_double(c, "synth", "tail_weight", lc.tail_weight);
        lc.tail_min = cfg_int(c, "synth", "tail_min", lc.tail_min);
        lc.tail_max = cfg_int(c, "synth", "tail_max", lc.tail_max);
        lc.injected_min = cfg_int(c, "synth", "injected_min", lc.injected_min);
        lc.injected_max = cfg_int(c, "synth", "injected_max", lc.injected_max);
        lc.max_pair_gap_seconds =
            cfg_int(c, "synth", "max_pair_gap_seconds", lc.max_pair_gap_seconds);
        lc.base_rate_usd = cfg_double(c, "synth", "base_rate", lc.base_rate_usd);
        lc.rate_daily_vol = cfg_double(c, "synth", "rate_vol", lc.rate_daily_vol);
        lc.seed = top_seed(c);
        const synth::GeneratedLedger g = synth::gen_ledger(lc);
        write_artifact(c, "ledger.csv", ingest::write_ledger(g.trades), written);
        write_artifact(c, "rates.csv", ingest::write_rates(g.rates), written);
        write_artifact(c, "truth.csv", synth::write_truth(g.truth), written);
        os << "synth: " << g.trades.size() << " trades, " << g.truth.size()
           << " injected pairs\n";
    } else if (mode == "panel") {
        synth::PanelDGP dgp;
        dgp.n_units = static_cast<std::size_t>(cfg_int(c, "synth", "n_units", 10));
        dgp.n_weeks = static_cast<std::size_t>(cfg_int(c, "synth", "n_weeks", 23));
        dgp.first_week_start = cfg_date(c, "synth", "first_week");
        dgp.treated_unit = static_cast<std::size_t>(cfg_int(c, "synth", "treated_unit", 0));
        dgp.first_treated_week =
            static_cast<std::size_t>(cfg_int(c, "synth", "first_treated_week", 12));
        dgp.true_beta = cfg_double(c, "synth", "beta", 0.0);
        dgp.unit_effect_min = cfg_double(c, "synth", "unit_effect_min", dgp.unit_effect_min);
        dgp.unit_effect_max = cfg_double(c, "synth", "unit_effect_max", dgp.unit_effect_max);
        dgp.week_effect_min = cfg_double(c, "synth", "week_effect_min", dgp.week_effect_min);
        dgp.week_effect_max = cfg_double(c, "synth", "week_effect_max", dgp.week_effect_max);
        dgp.poisson_noise = cfg_bool(c, "synth", "poisson_noise", false);
        dgp.seed = top_seed(c);
        const synth::GeneratedPanel g = synth::gen_panel(dgp);
        write_artifact(c, "panel.csv", panel::write_panel(g.panel), written);
        std::string truth = "treated,disbursement_date,true_beta\n";
        truth += g.treated + "," + format_date(g.disbursement_date) + "," +
                 fmt(g.true_beta) + "\n";
        write_artifact(c, "panel_truth.csv", truth, written);
        os << "synth: panel " << dgp.n_units << " units x " << dgp.n_weeks << " weeks, beta "
           << fmt(dgp.true_beta) << "\n";
    } else {
        fail("cli.config: [synth] mode: expected ledger or panel, got \"", mode, "\"");
    }
    write_manifest(c, "synth", written);
    report(os, c, written);
}

// Binds a flag to a config override; applied only when the flag was given.
struct Overrides {
    struct Item {
        CLI::Option* opt;
        std::string section, key;
        std::shared_ptr<std::string> holder;
    };
    std::vector<Item> items;

    void add(CLI::App* cmd, const std::string& flag, const std::string& section,
             const std::string& key, const std::string& help) {
        auto holder = std::make_shared<std::string>();
        items.push_back({cmd->add_option(flag, *holder, help), section, key, holder});
    }
    void apply(Config& cfg) const {
        for (const Item& it : items)
            if (it.opt->count() > 0) cfg.set(it.section, it.key, *it.holder);
    }
};

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::string section;
    const auto lines = split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            require(line.back() == ']' && line.size() > 2, "cli.config: line ", li + 1,
                    ": malformed section header \"", line, "\"");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, "cli.config: line ", li + 1,
                ": expected key = value, got \"", line, "\"");
        require(!section.empty(), "cli.config: line ", li + 1, ": key before any [section]");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), "cli.config: line ", li + 1, ": empty key");
        const auto [it, inserted] =
            cfg.sections[section].emplace(key, trim(line.substr(eq + 1)));
        (void)it;
        require(inserted, "cli.config: line ", li + 1, ": duplicate key ",
                key_ctx(section, key));
    }
    return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s != sections.end()) {
        const auto k = s->second.find(key);
        if (k != s->second.end()) return k->second;
    }
    fail("cli.config: missing required key ", key_ctx(section, key));
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
    sections[section][key] = std::move(value);
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [section, keys] : sections) {
        out += "[" + section + "]\n";
        for (const auto& [key, value] : keys) out += key + "=" + value + "\n";
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"cross-border crypto flow pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "sectioned key-value config file")
        ->configurable(false);

    Overrides ov;
    const auto common = [&](CLI::App* cmd) {
        ov.add(cmd, "--out", "paths", "out_dir", "output directory");
        ov.add(cmd, "--seed", "run", "seed", "top-level seed; all randomness derives from it");
        return cmd;
    };

    CLI::App* match = common(app.add_subcommand("match", "pair equal-size trades"));
    ov.add(match, "--ledger", "paths", "ledger", "trade ledger csv");
    ov.add(match, "--rates", "paths", "rates", "exchange-rate csv");
    ov.add(match, "--window-hours", "match", "window_hours", "pairing window, hours");
    ov.add(match, "--alpha", "match", "alpha", "match p-value threshold");
    ov.add(match, "--burn-in", "match", "burn_in", "trades before matching starts");

    const auto panelish = [&](CLI::App* cmd, bool with_filter) {
        ov.add(cmd, "--vehicles", "paths", "vehicles", "vehicle trades csv");
        ov.add(cmd, "--classification", "paths", "classification", "country income csv");
        ov.add(cmd, "--treated", "treat", "treated", "treated country code");
        ov.add(cmd, "--direction", "panel", "direction", "outflow or inflow");
        if (with_filter) ov.add(cmd, "--filter", "panel", "filter", "all, low, middle or high");
        ov.add(cmd, "--control-rule", "panel", "control_rule",
               "high-income, oecd or custom");
        ov.add(cmd, "--window-start", "panel", "window_start", "panel start date");
        ov.add(cmd, "--window-end", "panel", "window_end", "panel end date");
        return cmd;
    };

    CLI::App* pnl = panelish(common(app.add_subcommand("panel", "aggregate country x week")), true);
    ov.add(pnl, "--measure", "panel", "measure", "flow or size");

    CLI::App* did = panelish(
        common(app.add_subcommand("did", "difference-in-differences table")), false);
    ov.add(did, "--disbursement", "treat", "disbursement", "treatment start date");
    ov.add(did, "--panel-file", "paths", "panel", "fit one prebuilt panel instead");

    CLI::App* es = panelish(
        common(app.add_subcommand("event-study", "per-week treatment coefficients")), true);
    ov.add(es, "--disbursement", "treat", "disbursement", "treatment start date");
    ov.add(es, "--panel-file", "paths", "panel", "fit one prebuilt panel instead");

    CLI::App* ols = panelish(
        common(app.add_subcommand("ols-size", "transaction-size regressions")), false);
    ov.add(ols, "--disbursement", "treat", "disbursement", "treatment start date");
    ov.add(ols, "--panel-file", "paths", "panel", "fit one prebuilt size panel instead");

    CLI::App* sd = common(app.add_subcommand("sdid", "synthetic difference-in-differences"));
    ov.add(sd, "--panel-file", "paths", "panel", "panel csv to estimate on");
    ov.add(sd, "--treated", "treat", "treated", "treated unit (default: first row)");
    ov.add(sd, "--disbursement", "treat", "disbursement", "treatment start date");
    ov.add(sd, "--reps", "sdid", "reps", "placebo repetitions");
    ov.add(sd, "--zeta", "sdid", "zeta", "ridge scale override");

    CLI::App* sp = common(app.add_subcommand("spillover", "counterfactual and scenarios"));
    ov.add(sp, "--event-study-file", "paths", "event_study", "event-study csv");
    ov.add(sp, "--panel-file", "paths", "panel", "panel csv with observed flows");
    ov.add(sp, "--treated", "treat", "treated", "treated unit (default: first row)");
    ov.add(sp, "--fraction", "spillover", "fraction", "spillover share override");
    ov.add(sp, "--eip-total", "spillover", "eip_total", "stimulus total, USD");

    CLI::App* sy = common(app.add_subcommand("synth", "generate ledger or panel fixtures"));
    ov.add(sy, "--mode", "synth", "mode", "ledger or panel");

    std::vector<const char*> argv;
    argv.push_back("vflow");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        Config cfg;
        if (!config_path.empty()) cfg = Config::parse(read_text_file(config_path));
        ov.apply(cfg);
        if (app.got_subcommand(match)) run_match(cfg, out);
        else if (app.got_subcommand(pnl)) run_panel(cfg, out);
        else if (app.got_subcommand(did)) run_did(cfg, out);
        else if (app.got_subcommand(es)) run_event_study(cfg, out);
        else if (app.got_subcommand(ols)) run_ols_size(cfg, out);
        else if (app.got_subcommand(sd)) run_sdid(cfg, out);
        else if (app.got_subcommand(sp)) run_spillover(cfg, out);
        else if (app.got_subcommand(sy)) run_synth(cfg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace vflow::cli
