#include <doctest.h>

#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "vflow/calendar.hpp"
#include "vflow/cli.hpp"
#include "vflow/csv.hpp"
#include "vflow/econ.hpp"
#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"
#include "vflow/panel.hpp"
#include "vflow/sdid.hpp"

using namespace vflow;
using cli::Config;

namespace {

struct RunResult {
    int code = 0;
    std::string out, err;
};

RunResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    RunResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string classification_path() {
    return std::string(VFLOW_SOURCE_DIR) + "/data/income_classification.csv";
}

// Parses one row of a results table into its per-filter cells.
std::vector<std::string> table_row(const std::string& table, const std::string& stat) {
    for (const std::string& line : split_lines(table)) {
        auto f = split_csv(line);
        if (!f.empty() && f[0] == stat) return {f.begin() + 1, f.end()};
    }
    FAIL("row " << stat << " not found");
    return {};
}

}  // namespace

TEST_CASE("config parsing") {
    const Config c = Config::parse(
        "# top comment\n"
        "[match]\n"
        "alpha = 0.05\n"
        "  window_hours =  5 \n"
        "\n"
        "[paths]\n"
        "ledger = /tmp/a=b.csv\n");  // value keeps its '='
    CHECK(c.get("match", "alpha") == "0.05");
    CHECK(c.get("match", "window_hours") == "5");
    CHECK(c.get("paths", "ledger") == "/tmp/a=b.csv");
    CHECK(c.has("match", "alpha"));
    CHECK(!c.has("match", "alpa"));
    CHECK(c.get_or("match", "missing", "x") == "x");
    CHECK_THROWS_WITH_AS(c.get("match", "missing"), doctest::Contains("[match] missing"),
                         std::runtime_error);

    CHECK_THROWS_WITH_AS(Config::parse("[a]\nk = 1\nk = 2\n"), doctest::Contains("duplicate"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse("k = 1\n"), doctest::Contains("before any"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse("[a]\njust words\n"),
                         doctest::Contains("expected key = value"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse("[a\nk = 1\n"), doctest::Contains("malformed section"),
                         std::runtime_error);

    // Canonical form sorts sections and keys, so hashing ignores layout.
    Config a = Config::parse("[b]\nz = 1\na = 2\n[a]\nk = 3\n");
    Config b = Config::parse("[a]\nk = 3\n[b]\na = 2\nz = 1\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.canonical() == "[a]\nk=3\n[b]\na=2\nz=1\n");
    CHECK(cli::fnv1a64(a.canonical()) == cli::fnv1a64(b.canonical()));
}

TEST_CASE("fnv-1a hashes match the reference vectors") {
    CHECK(cli::fnv1a64("") == 14695981039346656037ull);
    CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(cli::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("argument errors exit nonzero") {
    CHECK(run_cli({}).code != 0);                       // a subcommand is required
    CHECK(run_cli({"frobnicate"}).code != 0);
    CHECK(run_cli({"match", "--no-such-flag"}).code != 0);

    const RunResult help = run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("match") != std::string::npos);

    const RunResult missing = run_cli({"--config", "/nonexistent/vflow.conf", "match"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected before any work") {
    fixtures::TempDir td("cli-badkey");
    write_text_file(td.file("cfg"), "[match]\nalpa = 0.05\n");
    const RunResult r = run_cli({"--config", td.file("cfg"), "match"});
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key [match] alpa") != std::string::npos);
}

TEST_CASE("did with an empty panel file reports it") {
    fixtures::TempDir td("cli-empty");
    write_text_file(td.file("panel.csv"), "");
    write_text_file(td.file("cfg"),
                    "[paths]\npanel = " + td.file("panel.csv") +
                        "\nout_dir = " + td.file("out") +
                        "\n[treat]\ndisbursement = 2020-04-09\n");
    const RunResult r = run_cli({"--config", td.file("cfg"), "did"});
    CHECK(r.code == 1);
    CHECK(r.err.find("empty panel") != std::string::npos);
}

TEST_CASE("synthetic panel feeds the estimators through files") {
    fixtures::TempDir td("cli-panelfit");
    const std::string out = td.file("out");
    write_text_file(td.file("cfg"),
                    "[paths]\nout_dir = " + out +
                        "\n[run]\nseed = 3\n"
                        "[synth]\nmode = panel\nn_units = 8\nn_weeks = 10\n"
                        "first_week = 2020-01-05\nfirst_treated_week = 6\nbeta = 0.163\n");
    const RunResult gen = run_cli({"--config", td.file("cfg"), "synth"});
    REQUIRE(gen.code == 0);

    // The truth file carries the treated label and the treatment date.
    const auto truth = split_csv(split_lines(read_text_file(out + "/panel_truth.csv"))[1]);
    REQUIRE(truth.size() == 3);
    const std::string treated = truth[0];
    const std::string disb = truth[1];
    CHECK(parse_double_field(truth[2], "beta") == 0.163);

    const RunResult fit = run_cli({"did", "--panel-file", out + "/panel.csv", "--treated",
                                   treated, "--disbursement", disb, "--out", td.file("fit")});
    REQUIRE(fit.code == 0);
    const auto j = nlohmann::json::parse(read_text_file(td.file("fit") + "/did_results.json"));
    REQUIRE(j.contains("all"));
    CHECK(std::fabs(j["all"]["beta"].get<double>() - 0.163) < 1e-7);
    CHECK(j["all"]["coefficients"].contains("treated_x_post"));

    // Identical rerun produces byte-identical artifacts, manifest included.
    const std::string json_before = read_text_file(td.file("fit") + "/did_results.json");
    const std::string manifest_before = read_text_file(td.file("fit") + "/manifest-did.txt");
    const RunResult again = run_cli({"did", "--panel-file", out + "/panel.csv", "--treated",
                                     treated, "--disbursement", disb, "--out", td.file("fit")});
    REQUIRE(again.code == 0);
    CHECK(read_text_file(td.file("fit") + "/did_results.json") == json_before);
    CHECK(read_text_file(td.file("fit") + "/manifest-did.txt") == manifest_before);
    CHECK(manifest_before.find("tool vflow 1.0.0\n") != std::string::npos);
    CHECK(manifest_before.find("subcommand did\n") != std::string::npos);
    CHECK(manifest_before.find("config_hash ") != std::string::npos);
    CHECK(manifest_before.find("artifact did_results.json") != std::string::npos);
}

TEST_CASE("ledger pipeline runs end to end on a no-effect fixture") {
    fixtures::TempDir td("cli-pipeline");
    const std::string out = td.file("out");
    const std::string cfg = td.file("cfg");
    write_text_file(
        cfg,
        "[paths]\nout_dir = " + out + "\nledger = " + out + "/ledger.csv\nrates = " + out +
            "/rates.csv\nclassification = " + classification_path() +
            "\n"
            "[run]\nseed = 5\n"
            "[synth]\nmode = ledger\nn_background = 4000\nn_injected_pairs = 400\n"
            "start = 2020-01-01\nhorizon_days = 60\n"
            "countries = US:0.35;NG:0.25;GB:0.2;ET:0.2\n"
            "injected_min = 60000000\ninjected_max = 90000000\n"
            "[match]\nburn_in = 500\n"
            "[panel]\ndirection = outflow\nwindow_start = 2020-01-01\n"
            "window_end = 2020-02-23\ncontrol_rule = custom\ncontrols = NG;GB;ET\n"
            "[treat]\ntreated = US\ndisbursement = 2020-02-02\n");

    REQUIRE(run_cli({"--config", cfg, "synth"}).code == 0);
    CHECK(ingest::load_ledger(out + "/ledger.csv").size() == 4800);

    const RunResult m = run_cli({"--config", cfg, "match"});
    REQUIRE(m.code == 0);
    const auto vehicles = matcher::load_vehicles(out + "/vehicles.csv");
    CHECK(vehicles.size() >= 300);  // injected pairs past burn-in dominate
    for (const auto& v : vehicles) CHECK(v.p_value <= 0.05);

    const RunResult p = run_cli({"--config", cfg, "panel"});
    REQUIRE(p.code == 0);
    const panel::FlowPanel fp = panel::load_panel(out + "/panel.csv");
    REQUIRE(fp.countries.size() == 4);
    CHECK(fp.countries[0] == "US");  // treated leads, controls sorted after
    CHECK(fp.week_starts.size() == 8);

    const RunResult d = run_cli({"--config", cfg, "did"});
    REQUIRE(d.code == 0);
    const std::string table = read_text_file(out + "/did_table.csv");
    CHECK(split_lines(table)[0] == "statistic,all,low,middle,high");
    const auto theta = table_row(table, "theta");
    const auto theta_se = table_row(table, "theta_se");
    REQUIRE(theta.size() == 4);
    // No effect was injected: the all-counterparty estimate stays near zero.
    const double th = parse_double_field(theta[0], "theta");
    const double se = parse_double_field(theta_se[0], "theta_se");
    CHECK(std::fabs(th) <= std::max(4.0 * se, 0.75));

    const RunResult es = run_cli({"--config", cfg, "event-study"});
    REQUIRE(es.code == 0);
    const econ::EventStudyResult study = econ::load_event_study(out + "/event_study.csv");
    CHECK(study.week_starts.size() == 8);
    CHECK(format_date(study.reference_week) == "2020-01-26");
    CHECK(format_date(study.disbursement_week) == "2020-02-02");

    const RunResult ols = run_cli({"--config", cfg, "ols-size"});
    REQUIRE(ols.code == 0);
    const std::string sizes = read_text_file(out + "/size_table.csv");
    CHECK(split_lines(sizes)[0] == "statistic,all,low,middle,high");
    CHECK(table_row(sizes, "beta").size() == 4);

    // Spillover with a pinned fraction: deterministic hand arithmetic.
    const RunResult sp = run_cli({"--config", cfg, "spillover", "--fraction", "0.0127"});
    REQUIRE(sp.code == 0);
    const auto scen = split_lines(read_text_file(out + "/scenarios.csv"));
    REQUIRE(scen.size() == 7);
    bool found = false;
    for (const std::string& line : scen) {
        const auto f = split_csv(line);
        if (f[0] == "Official remittances") {
            found = true;
            CHECK(parse_double_field(f[3], "spillover") ==
                  doctest::Approx(66.54e9 * 0.0127).epsilon(1e-12));
        }
    }
    CHECK(found);

    // Re-running match with identical config and seed is byte-identical.
    const std::string vehicles_before = read_text_file(out + "/vehicles.csv");
    const std::string manifest_before = read_text_file(out + "/manifest-match.txt");
    REQUIRE(run_cli({"--config", cfg, "match"}).code == 0);
    CHECK(read_text_file(out + "/vehicles.csv") == vehicles_before);
    CHECK(read_text_file(out + "/manifest-match.txt") == manifest_before);
}

TEST_CASE("spillover run with a zero-effect study yields all-zero scenarios") {
    fixtures::TempDir td("cli-spill");
    const std::string out = td.file("out");

    Eigen::MatrixXd Y(2, 5);
    Y << 100, 110, 120, 115, 105,
          90,  95,  85,  88,  91;
    panel::FlowPanel p = fixtures::panel_from({"US", "NG"}, Y);
    panel::save_panel(td.file("panel.csv"), p);

    econ::EventStudyResult es;
    es.week_starts = p.week_starts;
    es.beta = Eigen::VectorXd::Zero(5);
    es.se = Eigen::VectorXd::Zero(5);
    es.theta = Eigen::VectorXd::Zero(5);
    es.theta_se = Eigen::VectorXd::Zero(5);
    es.disbursement_week = p.week_starts[2];
    es.reference_week = p.week_starts[1];
    write_text_file(td.file("es.csv"), econ::write_event_study(es));

    const RunResult r = run_cli({"spillover", "--panel-file", td.file("panel.csv"),
                                 "--event-study-file", td.file("es.csv"), "--out", out});
    REQUIRE(r.code == 0);
    const auto lines = split_lines(read_text_file(out + "/scenarios.csv"));
    REQUIRE(lines.size() == 7);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv(lines[i]);
        CHECK(parse_double_field(f[3], "spillover") == 0.0);
        CHECK(parse_double_field(f[4], "pct") == 0.0);
    }
    // Counterfactual equals observed everywhere.
    const auto cf = split_lines(read_text_file(out + "/counterfactual.csv"));
    for (std::size_t i = 1; i < cf.size(); ++i) {
        const auto f = split_csv(cf[i]);
        CHECK(f[1] == f[2]);
    }
}

TEST_CASE("sdid subcommand recovers the common-trend effect") {
    fixtures::TempDir td("cli-sdid");
    const std::string out = td.file("out");

    const Eigen::Index T = 8, t_pre = 5;
    Eigen::VectorXd trend(T);
    trend << 3, 9, 1, 7, 5, 8, 2, 6;
    Eigen::MatrixXd Y(5, T);
    const double levels[4] = {40, 55, 70, 85};
    for (Eigen::Index t = 0; t < T; ++t) {
        Y(0, t) = 60 + trend(t) + (t >= t_pre ? 100.0 : 0.0);
        for (Eigen::Index i = 0; i < 4; ++i) Y(i + 1, t) = levels[i] + trend(t);
    }
    panel::save_panel(td.file("panel.csv"),
                      fixtures::panel_from({"T0", "C1", "C2", "C3", "C4"}, Y));
    const std::string disb = format_date(fixtures::day("2020-01-05") + t_pre * kSecondsPerWeek);

    const RunResult r = run_cli({"sdid", "--panel-file", td.file("panel.csv"), "--disbursement",
                                 disb, "--reps", "8", "--seed", "4", "--out", out});
    REQUIRE(r.code == 0);
    const auto head = split_lines(read_text_file(out + "/sdid.csv"));
    REQUIRE(head.size() == 2);
    CHECK(head[0] == "tau,se,tau_relative,se_relative,pre_mean,placebo_reps");
    const auto f = split_csv(head[1]);
    CHECK(parse_double_field(f[0], "tau") == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(f[5] == "8");

    CHECK(split_lines(read_text_file(out + "/sdid_unit_weights.csv")).size() == 5);
    CHECK(split_lines(read_text_file(out + "/sdid_time_weights.csv")).size() == 6);
    CHECK(split_lines(read_text_file(out + "/sdid_effect_path.csv")).size() == 4);

    // reps below the minimum is a config error.
    CHECK(run_cli({"sdid", "--panel-file", td.file("panel.csv"), "--disbursement", disb,
                   "--reps", "1", "--out", out})
              .code == 1);
}

TEST_CASE("ols-size refuses a flow panel and fits a size panel") {
    fixtures::TempDir td("cli-ols");
    // Additive unit/week base so the planted effect is identified exactly.
    Eigen::MatrixXd Y(3, 4);
    Y << 30, 31, 34, 33,
         26, 27, 30, 29,
         21, 22, 25, 24;
    panel::FlowPanel flow = fixtures::panel_from({"T", "C1", "C2"}, Y);
    panel::save_panel(td.file("flow.csv"), flow);
    const RunResult bad = run_cli({"ols-size", "--panel-file", td.file("flow.csv"),
                                   "--disbursement", "2020-01-19", "--out", td.file("o1")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("transaction sizes") != std::string::npos);

    panel::FlowPanel size = flow;
    size.measure = panel::Measure::MeanTransactionSizeUSD;
    // Plant an exact additive effect in the treated post cells.
    size.values(0, 2) += 5.0;
    size.values(0, 3) += 5.0;
    panel::save_panel(td.file("size.csv"), size);
    const RunResult ok = run_cli({"ols-size", "--panel-file", td.file("size.csv"),
                                  "--disbursement", "2020-01-19", "--out", td.file("o2")});
    REQUIRE(ok.code == 0);
    const auto j = nlohmann::json::parse(read_text_file(td.file("o2") + "/size_results.json"));
    CHECK(std::fabs(j["all"]["beta"].get<double>() - 5.0) < 1e-8);
}

TEST_CASE("seed flag overrides the config file value") {
    fixtures::TempDir td("cli-seed");
    const std::string out = td.file("out");
    write_text_file(td.file("cfg"),
                    "[paths]\nout_dir = " + out +
                        "\n[run]\nseed = 3\n"
                        "[synth]\nmode = panel\nn_units = 4\nn_weeks = 6\n"
                        "first_week = 2020-01-05\nfirst_treated_week = 3\n");
    REQUIRE(run_cli({"--config", td.file("cfg"), "synth", "--seed", "9"}).code == 0);
    const std::string manifest = read_text_file(out + "/manifest-synth.txt");
    CHECK(manifest.find("\nseed 9\n") != std::string::npos);

    REQUIRE(run_cli({"--config", td.file("cfg"), "synth"}).code == 0);
    CHECK(read_text_file(out + "/manifest-synth.txt").find("\nseed 3\n") != std::string::npos);
}
