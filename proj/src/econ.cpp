#include "vflow/econ.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"

namespace vflow::econ {

using panel::FlowPanel;

namespace {

struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> cluster;  // unit index per row
    std::vector<std::string> coef_names;
    Eigen::Index interaction = 0;   // first treatment column
    Eigen::Index n_treat_cols = 1;  // 1 for DID, T-1 for the event study
    std::size_t n_units = 0;
    std::vector<std::string> dropped_units;
};

struct TreatWeeks {
    std::int64_t disb_week = 0;
    std::int64_t ref_week = 0;
    Eigen::Index disb_idx = 0;  // first treated week index
};

TreatWeeks locate_treatment(const FlowPanel& p, const TreatSpec& treat) {
    TreatWeeks tw;
    tw.disb_week = week_start_sunday(treat.disbursement_date);
    tw.ref_week = tw.disb_week - kSecondsPerWeek;
    const auto it = std::lower_bound(p.week_starts.begin(), p.week_starts.end(), tw.disb_week);
    require(it != p.week_starts.end() && *it == tw.disb_week,
            "econ: disbursement week ", format_date(tw.disb_week), " not inside the panel");
    tw.disb_idx = static_cast<Eigen::Index>(it - p.week_starts.begin());
    require(tw.disb_idx > 0, "econ: no pre-period weeks before disbursement");
    return tw;
}

// Assembles the stacked design over the kept units and non-missing cells.
// Columns: treatment interaction(s), extra regressors, unit dummies, then
// week dummies (first week as base) unless drop_time_fe.
Design build_design(const FlowPanel& p, const TreatSpec& treat, bool event_study,
                    bool poisson) {
    const auto n_units_all = static_cast<std::size_t>(p.values.rows());
    const auto n_weeks = static_cast<Eigen::Index>(p.week_starts.size());
    require(n_units_all >= 2, "econ: panel needs at least two units");
    const TreatWeeks tw = locate_treatment(p, treat);

    std::vector<std::string> treated_names{treat.treated};
    treated_names.insert(treated_names.end(), treat.also_treated.begin(),
                         treat.also_treated.end());
    std::vector<Eigen::Index> treated_rows;
    treated_rows.reserve(treated_names.size());
    for (const std::string& name : treated_names) {
        Eigen::Index row = -1;
        for (std::size_t i = 0; i < n_units_all; ++i)
            if (p.countries[i] == name) row = static_cast<Eigen::Index>(i);
        require(row >= 0, "econ: treated country ", name, " not in panel");
        require(std::find(treated_rows.begin(), treated_rows.end(), row) == treated_rows.end(),
                "econ: treated country ", name, " listed twice");
        treated_rows.push_back(row);
    }

    for (const NamedSeries& s : treat.extra_regressors)
        require(s.by_week.size() == static_cast<std::size_t>(n_weeks), "econ: regressor ",
                s.name, " has ", s.by_week.size(), " weeks, panel has ", n_weeks);

    // Keep units with any signal: nonzero outcome for Poisson, any
    // non-missing cell for OLS.
    std::vector<Eigen::Index> kept;
    Design d;
    for (std::size_t i = 0; i < n_units_all; ++i) {
        const auto row = p.values.row(static_cast<Eigen::Index>(i));
        bool keep = false;
        for (Eigen::Index w = 0; w < n_weeks; ++w) {
            const double v = row(w);
            if (poisson) {
                require(!std::isnan(v), "econ: Poisson panel has a missing cell at ",
                        p.countries[i], " / ", format_date(p.week_starts[w]));
                require(v >= 0, "econ: negative outcome at ", p.countries[i]);
                if (v > 0) keep = true;
            } else if (!std::isnan(v)) {
                keep = true;
            }
        }
        if (keep)
            kept.push_back(static_cast<Eigen::Index>(i));
        else
            d.dropped_units.push_back(p.countries[i]);
    }
    std::sort(d.dropped_units.begin(), d.dropped_units.end());
    require(kept.size() >= 2, "econ: empty panel after dropping units without signal");

    std::vector<char> treated_kept_flag(kept.size(), 0);
    for (std::size_t ti = 0; ti < treated_rows.size(); ++ti) {
        bool found = false;
        for (std::size_t k = 0; k < kept.size(); ++k)
            if (kept[k] == treated_rows[ti]) { treated_kept_flag[k] = 1; found = true; }
        require(found, "econ: treated unit ", treated_names[ti],
                " has no signal in the panel");
    }

    if (poisson) {
        // Separation guard: an all-zero regime across the treated group sends
        // the interaction (or an event coefficient) to -infinity. A single
        // zero regime inside one unit of a larger group is fine: its unit
        // dummy absorbs it.
        const std::string who = treated_rows.size() == 1
                                    ? "treated unit " + treat.treated
                                    : std::string("the treated group");
        double pre = 0, post = 0;
        for (const Eigen::Index row : treated_rows)
            for (Eigen::Index w = 0; w < n_weeks; ++w)
                (w < tw.disb_idx ? pre : post) += p.values(row, w);
        require(pre > 0 && post > 0, "econ: separation: ", who, " is all-zero in the ",
                pre > 0 ? "post" : "pre", "-period");
        if (event_study)
            for (Eigen::Index w = 0; w < n_weeks; ++w) {
                double col = 0;
                for (const Eigen::Index row : treated_rows) col += p.values(row, w);
                require(col > 0, "econ: separation: ", who, " is zero in week ",
                        format_date(p.week_starts[w]));
            }
        // An all-zero week drives its dummy to -infinity; refuse it with a
        // better message than the singular-matrix guard would give.
        if (!treat.drop_time_fe)
            for (Eigen::Index w = 0; w < n_weeks; ++w) {
                double col = 0;
                for (const Eigen::Index unit : kept) col += p.values(unit, w);
                require(col > 0, "econ: separation: week ", format_date(p.week_starts[w]),
                        " has all-zero outcomes across kept units");
            }
    }

    d.n_units = kept.size();
    d.n_treat_cols = event_study ? n_weeks - 1 : 1;
    const Eigen::Index n_extra = static_cast<Eigen::Index>(treat.extra_regressors.size());
    const Eigen::Index n_unit_cols = static_cast<Eigen::Index>(kept.size());

    // Week dummies cover only weeks that actually contribute rows; a size
    // panel can lose whole weeks to missing cells, and a dummy without rows
    // is structurally zero. The first present week is the base.
    std::vector<Eigen::Index> week_col(static_cast<std::size_t>(n_weeks), -1);
    Eigen::Index n_week_cols = 0;
    if (!treat.drop_time_fe) {
        bool base_seen = false;
        for (Eigen::Index w = 0; w < n_weeks; ++w) {
            bool present = false;
            for (const Eigen::Index unit : kept)
                if (!std::isnan(p.values(unit, w))) { present = true; break; }
            if (!present) continue;
            if (!base_seen) { base_seen = true; continue; }
            week_col[static_cast<std::size_t>(w)] = n_week_cols++;
        }
    }
    const Eigen::Index p_cols = d.n_treat_cols + n_extra + n_unit_cols + n_week_cols;

    d.coef_names.reserve(static_cast<std::size_t>(p_cols));
    if (event_study) {
        for (Eigen::Index w = 0; w < n_weeks; ++w)
            if (w != tw.disb_idx - 1)
                d.coef_names.push_back("treated_x_" + format_date(p.week_starts[w]));
    } else {
        d.coef_names.push_back("treated_x_post");
    }
    for (const NamedSeries& s : treat.extra_regressors) d.coef_names.push_back(s.name);
    for (Eigen::Index k = 0; k < n_unit_cols; ++k)
        d.coef_names.push_back("unit_" + p.countries[static_cast<std::size_t>(kept[k])]);
    for (Eigen::Index w = 0; w < n_weeks; ++w)
        if (week_col[static_cast<std::size_t>(w)] >= 0)
            d.coef_names.push_back("week_" + format_date(p.week_starts[w]));

    // Count usable rows first (OLS skips missing cells).
    std::size_t rows = 0;
    for (Eigen::Index k = 0; k < n_unit_cols; ++k)
        for (Eigen::Index w = 0; w < n_weeks; ++w)
            if (!std::isnan(p.values(kept[static_cast<std::size_t>(k)], w))) ++rows;

    d.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), p_cols);
    d.y.resize(static_cast<Eigen::Index>(rows));
    d.cluster.resize(rows);
    d.interaction = 0;

    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < n_unit_cols; ++k) {
        const Eigen::Index unit = kept[static_cast<std::size_t>(k)];
        for (Eigen::Index w = 0; w < n_weeks; ++w) {
            const double v = p.values(unit, w);
            if (std::isnan(v)) continue;
            d.y(r) = v;
            d.cluster[static_cast<std::size_t>(r)] = static_cast<int>(k);
            if (treated_kept_flag[static_cast<std::size_t>(k)]) {
                if (event_study) {
                    if (w != tw.disb_idx - 1) {
                        const Eigen::Index col = w < tw.disb_idx - 1 ? w : w - 1;
                        d.X(r, col) = 1.0;
                    }
                } else if (w >= tw.disb_idx) {
                    d.X(r, 0) = 1.0;
                }
            }
            for (Eigen::Index e = 0; e < n_extra; ++e)
                d.X(r, d.n_treat_cols + e) =
                    treat.extra_regressors[static_cast<std::size_t>(e)]
                        .by_week[static_cast<std::size_t>(w)];
            d.X(r, d.n_treat_cols + n_extra + k) = 1.0;
            if (const Eigen::Index wc = week_col[static_cast<std::size_t>(w)]; wc >= 0)
                d.X(r, d.n_treat_cols + n_extra + n_unit_cols + wc) = 1.0;
            ++r;
        }
    }
    return d;
}

// Solves A x = b for symmetric positive definite A, failing on a collinear
// design instead of returning garbage.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const char* ctx) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    require(ldlt.info() == Eigen::Success, "econ: ", ctx, ": decomposition failed");
    const auto dvec = ldlt.vectorD();
    const double dmax = dvec.cwiseAbs().maxCoeff();
    require(dvec.minCoeff() > dmax * 1e-12, "econ: ", ctx,
            ": collinear design (rank-deficient normal matrix)");
    return ldlt.solve(B);
}

Eigen::MatrixXd cluster_sandwich(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
                                 const std::vector<int>& cluster, const Eigen::MatrixXd& bread_inv,
                                 std::size_t n_clusters) {
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_clusters), p);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        scores.row(cluster[static_cast<std::size_t>(r)]) += resid(r) * X.row(r);
    meat = scores.transpose() * scores;
    const double g = static_cast<double>(n_clusters);
    require(n_clusters >= 2, "econ: clustered variance needs at least two clusters");
    Eigen::MatrixXd v = bread_inv * meat * bread_inv * (g / (g - 1.0));
    return (v + v.transpose()) / 2.0;
}

struct IrlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd mu;
    int iterations = 0;
    double deviance = 0.0;
};

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) > 0) dev += y(i) * std::log(y(i) / mu(i)) - (y(i) - mu(i));
        else dev += mu(i);
    }
    return 2.0 * dev;
}

IrlsFit irls_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    IrlsFit fit;
    const double ybar = y.mean();
    Eigen::VectorXd mu = ((y.array() + ybar) / 2.0).matrix();
    Eigen::VectorXd eta = mu.array().log().matrix();
    double dev = poisson_deviance(y, mu);
    for (int iter = 1; iter <= 200; ++iter) {
        const Eigen::VectorXd w = mu;
        const Eigen::VectorXd z =
            (eta.array() + (y - mu).array() / mu.array()).matrix();
        const Eigen::MatrixXd Xw = w.asDiagonal() * X;
        const Eigen::MatrixXd A = X.transpose() * Xw;
        const Eigen::VectorXd b = Xw.transpose() * z;
        fit.beta = solve_spd(A, b, "irls");
        eta = X * fit.beta;
        require(eta.maxCoeff() < 700.0, "econ: irls diverged (linear predictor overflow)");
        mu = eta.array().exp().matrix();
        require(mu.allFinite() && mu.minCoeff() > 0, "econ: irls produced non-finite means");
        const double dev_new = poisson_deviance(y, mu);
        const Eigen::VectorXd score = X.transpose() * (y - mu);
        fit.iterations = iter;
        fit.deviance = dev_new;
        fit.mu = mu;
        const double score_max = score.cwiseAbs().maxCoeff();
        const double rel_dev = std::abs(dev_new - dev) / (0.1 + std::abs(dev_new));
        if (score_max < 1e-8 || rel_dev < 1e-10) return fit;
        dev = dev_new;
    }
    fail("econ: irls did not converge within 200 iterations");
}

FitResult finalize_poisson(const Design& d, const IrlsFit& fit) {
    const Eigen::Index p = d.X.cols();
    const Eigen::MatrixXd A = d.X.transpose() * (fit.mu.asDiagonal() * d.X);
    const Eigen::MatrixXd bread_inv = solve_spd(A, Eigen::MatrixXd::Identity(p, p), "vcov");
    FitResult r;
    r.coef_names = d.coef_names;
    r.beta = fit.beta;
    r.vcov = cluster_sandwich(d.X, d.y - fit.mu, d.cluster, bread_inv, d.n_units);
    r.interaction = d.interaction;
    r.theta.resize(p);
    r.theta_se.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto [t, ts] = delta_transform(fit.beta(j), std::sqrt(r.vcov(j, j)));
        r.theta(j) = t;
        r.theta_se(j) = ts;
    }
    r.n_obs = static_cast<std::size_t>(d.X.rows());
    r.n_clusters = d.n_units;
    r.dropped_units = d.dropped_units;
    r.iterations = fit.iterations;
    r.deviance = fit.deviance;
    return r;
}

}  // namespace

FitResult fit_poisson_twfe(const FlowPanel& p, const TreatSpec& treat) {
    const Design d = build_design(p, treat, /*event_study=*/false, /*poisson=*/true);
    return finalize_poisson(d, irls_poisson(d.X, d.y));
}

EventStudyResult fit_event_study(const FlowPanel& p, const TreatSpec& treat) {
    const Design d = build_design(p, treat, /*event_study=*/true, /*poisson=*/true);
    const FitResult fit = finalize_poisson(d, irls_poisson(d.X, d.y));
    const TreatWeeks tw = locate_treatment(p, treat);

    EventStudyResult es;
    es.week_starts = p.week_starts;
    const auto n_weeks = static_cast<Eigen::Index>(p.week_starts.size());
    es.beta = Eigen::VectorXd::Zero(n_weeks);
    es.se = Eigen::VectorXd::Zero(n_weeks);
    es.theta = Eigen::VectorXd::Zero(n_weeks);
    es.theta_se = Eigen::VectorXd::Zero(n_weeks);
    for (Eigen::Index w = 0; w < n_weeks; ++w) {
        if (w == tw.disb_idx - 1) continue;  // reference week: identically zero
        const Eigen::Index col = w < tw.disb_idx - 1 ? w : w - 1;
        es.beta(w) = fit.beta(col);
        es.se(w) = std::sqrt(fit.vcov(col, col));
        const auto [t, ts] = delta_transform(es.beta(w), es.se(w));
        es.theta(w) = t;
        es.theta_se(w) = ts;
    }
    es.reference_week = tw.ref_week;
    es.disbursement_week = tw.disb_week;
    es.n_obs = fit.n_obs;
    es.dropped_units = fit.dropped_units;
    return es;
}

FitResult fit_ols_twfe(const FlowPanel& p, const TreatSpec& treat) {
    const Design d = build_design(p, treat, /*event_study=*/false, /*poisson=*/false);
    const Eigen::Index pc = d.X.cols();
    const Eigen::MatrixXd A = d.X.transpose() * d.X;
    const Eigen::VectorXd b = d.X.transpose() * d.y;
    FitResult r;
    r.coef_names = d.coef_names;
    r.beta = solve_spd(A, b, "ols");
    const Eigen::MatrixXd bread_inv = solve_spd(A, Eigen::MatrixXd::Identity(pc, pc), "vcov");
    r.vcov = cluster_sandwich(d.X, d.y - d.X * r.beta, d.cluster, bread_inv, d.n_units);
    r.interaction = d.interaction;
    r.n_obs = static_cast<std::size_t>(d.X.rows());
    r.n_clusters = d.n_units;
    r.dropped_units = d.dropped_units;
    r.iterations = 1;
    r.deviance = (d.y - d.X * r.beta).squaredNorm();
    return r;
}

std::pair<double, double> delta_transform(double beta, double se) {
    require(se >= 0, "econ.delta_transform: negative standard error");
    const double eb = std::exp(beta);
    return {eb - 1.0, eb * se};
}

std::string write_event_study(const EventStudyResult& es) {
    std::string out;
    out += "# reference_week=" + format_date(es.reference_week) + "\n";
    out += "# disbursement_week=" + format_date(es.disbursement_week) + "\n";
    out += "# n_obs=" + std::to_string(es.n_obs) + "\n";
    out += "week_start,beta,se,theta,theta_se,reference\n";
    for (std::size_t w = 0; w < es.week_starts.size(); ++w) {
        const auto i = static_cast<Eigen::Index>(w);
        out += format_date(es.week_starts[w]);
        out += ',';
        out += format_double(es.beta(i));
        out += ',';
        out += format_double(es.se(i));
        out += ',';
        out += format_double(es.theta(i));
        out += ',';
        out += format_double(es.theta_se(i));
        out += ',';
        out += es.week_starts[w] == es.reference_week ? '1' : '0';
        out += '\n';
    }
    return out;
}

EventStudyResult parse_event_study(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    EventStudyResult es;
    std::size_t li = 0;
    for (; li < lines.size() && !lines[li].empty() && lines[li][0] == '#'; ++li) {
        const std::size_t eq = lines[li].find('=');
        require(eq != std::string::npos, "econ.parse_event_study: bad metadata line ", li + 1);
        const std::string key = lines[li].substr(2, eq - 2);
        const std::string val = lines[li].substr(eq + 1);
        if (key == "reference_week") es.reference_week = parse_date(val);
        else if (key == "disbursement_week") es.disbursement_week = parse_date(val);
        else if (key == "n_obs") es.n_obs = static_cast<std::size_t>(
            parse_int64_field(val, "event study n_obs"));
    }
    require(li < lines.size() && lines[li] == "week_start,beta,se,theta,theta_se,reference",
            "econ.parse_event_study: missing column header");
    ++li;
    std::vector<double> beta, se, theta, theta_se;
    for (; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::string where = "event study line " + std::to_string(li + 1);
        const auto f = split_csv(lines[li]);
        require(f.size() == 6, "econ.parse_event_study: ", where, ": expected 6 columns");
        es.week_starts.push_back(parse_date(f[0]));
        beta.push_back(parse_double_field(f[1], where));
        se.push_back(parse_double_field(f[2], where));
        theta.push_back(parse_double_field(f[3], where));
        theta_se.push_back(parse_double_field(f[4], where));
    }
    const auto n = static_cast<Eigen::Index>(beta.size());
    es.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), n);
    es.se = Eigen::Map<Eigen::VectorXd>(se.data(), n);
    es.theta = Eigen::Map<Eigen::VectorXd>(theta.data(), n);
    es.theta_se = Eigen::Map<Eigen::VectorXd>(theta_se.data(), n);
    return es;
}

EventStudyResult load_event_study(const std::string& path) {
    return parse_event_study(read_text_file(path));
}

}  // namespace vflow::econ
