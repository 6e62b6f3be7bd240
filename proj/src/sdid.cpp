#include "vflow/sdid.hpp"

#include <algorithm>
#include <cmath>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"
#include "vflow/rng.hpp"

namespace vflow::sdid {

void SdidProblem::validate() const {
    const auto n = static_cast<Eigen::Index>(units.size());
    const auto t = static_cast<Eigen::Index>(week_starts.size());
    require(Y.rows() == n && Y.cols() == t, "sdid: matrix shape does not match labels");
    require(n >= 2, "sdid: need at least one control unit");
    require(treated >= 0 && treated < n, "sdid: treated row out of range");
    require(t_pre >= 1, "sdid: need at least one pre-treatment week");
    require(t_pre < t, "sdid: need at least one post-treatment week");
    require(Y.allFinite(), "sdid: outcome matrix has non-finite cells");
}

Eigen::VectorXd solve_simplex_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 double ridge, SimplexSolveInfo* info) {
    const Eigen::Index n = A.cols();
    require(n >= 1, "sdid.simplex: no candidate columns");
    require(A.rows() == b.size(), "sdid.simplex: dimension mismatch");
    require(ridge >= 0, "sdid.simplex: negative ridge");

    // Scale the problem to unit size so the KKT tolerance is meaningful for
    // any data magnitude; the minimizer is invariant because the ridge scales
    // with the data too.
    double scale = std::max(A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (scale <= 0) scale = 1.0;
    const Eigen::MatrixXd As = A / scale;
    const Eigen::VectorXd bs = b / scale;
    const double ridge_s = ridge / (scale * scale);

    const Eigen::MatrixXd Q =
        As.transpose() * As + ridge_s * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd c = As.transpose() * bs;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    constexpr double kTol = 1e-8;
    constexpr int kMaxIter = 10000;
    int iter = 0;
    double residual = 0.0;
    bool converged = false;
    for (; iter < kMaxIter; ++iter) {
        const Eigen::VectorXd g = 2.0 * (Q * x - c);
        Eigen::Index i_fw = 0, i_aw = -1;
        g.minCoeff(&i_fw);
        double g_aw = -1e300;
        for (Eigen::Index i = 0; i < n; ++i)
            if (x(i) > 0 && g(i) > g_aw) {
                g_aw = g(i);
                i_aw = i;
            }
        // Frank-Wolfe gap: certifies optimality over the simplex.
        residual = g.dot(x) - g(i_fw);
        if (residual <= kTol) {
            converged = true;
            break;
        }

        Eigen::VectorXd d;
        double gamma_max = 0.0;
        const double fw_gain = residual;            // -g . (e_fw - x)
        const double aw_gain = g_aw - g.dot(x);     // -g . (x - e_aw)
        if (i_aw < 0 || fw_gain >= aw_gain) {
            d = Eigen::VectorXd::Unit(n, i_fw) - x;
            gamma_max = 1.0;
        } else {
            d = x - Eigen::VectorXd::Unit(n, i_aw);
            const double alpha = x(i_aw);
            gamma_max = alpha / (1.0 - std::min(alpha, 1.0 - 1e-16));
        }
        const double dQd = d.dot(Q * d);
        const double gd = g.dot(d);
        double gamma = gamma_max;
        if (dQd > 0) gamma = std::min(gamma_max, -gd / (2.0 * dQd));
        x += gamma * d;
        // Clip drift and stay on the simplex exactly.
        for (Eigen::Index i = 0; i < n; ++i)
            if (x(i) < 1e-15) x(i) = 0.0;
        x /= x.sum();
    }
    require(converged, "sdid.simplex: no convergence after ", kMaxIter,
            " iterations (kkt residual ", residual, ")");
    if (info) {
        info->iterations = iter;
        info->kkt_residual = residual;
        info->objective = (A * x - b).squaredNorm() + ridge * x.squaredNorm();
    }
    return x;
}

namespace {

std::vector<Eigen::Index> control_rows(const SdidProblem& prob) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < prob.Y.rows(); ++i)
        if (i != prob.treated) rows.push_back(i);
    return rows;
}

}  // namespace

double zeta_for(const SdidProblem& prob) {
    prob.validate();
    if (prob.zeta_override) return *prob.zeta_override;
    const auto ctrl = control_rows(prob);
    // sd of first differences of control pre-period outcomes.
    std::vector<double> diffs;
    for (const Eigen::Index i : ctrl)
        for (Eigen::Index t = 1; t < prob.t_pre; ++t)
            diffs.push_back(prob.Y(i, t) - prob.Y(i, t - 1));
    if (diffs.empty()) return 0.0;  // single pre week: no difference signal
    double mean = 0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    double ss = 0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(diffs.size()));
    return std::pow(static_cast<double>(prob.n_post()), 0.25) * sd;
}

SdidWeights solve_weights(const SdidProblem& prob) {
    prob.validate();
    const auto ctrl = control_rows(prob);
    const auto n_ctrl = static_cast<Eigen::Index>(ctrl.size());
    const Eigen::Index t_pre = prob.t_pre;
    const Eigen::Index t_post = prob.n_post();

    SdidWeights w;

    // Unit weights: match the treated pre-period series with an intercept.
    // The free intercept is absorbed by demeaning every series over the pre
    // window (for simplex weights the weighted mean of unit means equals the
    // mean of the weighted combination).
    {
        Eigen::MatrixXd A(t_pre, n_ctrl);
        for (Eigen::Index k = 0; k < n_ctrl; ++k) {
            const auto row = prob.Y.row(ctrl[static_cast<std::size_t>(k)]).head(t_pre);
            A.col(k) = row.transpose().array() - row.mean();
        }
        const auto tr = prob.Y.row(prob.treated).head(t_pre);
        const Eigen::VectorXd b = (tr.transpose().array() - tr.mean()).matrix();
        const double zeta = zeta_for(prob);
        const double ridge = zeta * zeta * static_cast<double>(t_pre);
        w.omega = solve_simplex_ls(A, b, ridge, &w.omega_info);
        double mix = 0;
        for (Eigen::Index k = 0; k < n_ctrl; ++k)
            mix += w.omega(k) * prob.Y.row(ctrl[static_cast<std::size_t>(k)]).head(t_pre).mean();
        w.omega_intercept = tr.mean() - mix;
    }

    // Time weights: predict each control's post mean from its pre weeks; the
    // intercept is absorbed by demeaning across controls, column by column.
    {
        Eigen::MatrixXd A(n_ctrl, t_pre);
        Eigen::VectorXd b(n_ctrl);
        for (Eigen::Index k = 0; k < n_ctrl; ++k) {
            const Eigen::Index i = ctrl[static_cast<std::size_t>(k)];
            A.row(k) = prob.Y.row(i).head(t_pre);
            b(k) = prob.Y.row(i).tail(t_post).mean();
        }
        const Eigen::RowVectorXd col_means = A.colwise().mean();
        A.rowwise() -= col_means;
        const double b_mean = b.mean();
        b.array() -= b_mean;
        w.lambda = solve_simplex_ls(A, b, 0.0, &w.lambda_info);
        w.lambda_intercept = b_mean - col_means.dot(w.lambda);
    }
    return w;
}

double tau_given_weights(const SdidProblem& prob, const Eigen::VectorXd& omega,
                         const Eigen::VectorXd& lambda) {
    prob.validate();
    const auto ctrl = control_rows(prob);
    require(omega.size() == static_cast<Eigen::Index>(ctrl.size()),
            "sdid.tau: omega size mismatch");
    require(lambda.size() == prob.t_pre, "sdid.tau: lambda size mismatch");
    const Eigen::Index t_post = prob.n_post();

    const double tr_post = prob.Y.row(prob.treated).tail(t_post).mean();
    const double tr_pre_w = prob.Y.row(prob.treated).head(prob.t_pre).dot(lambda);
    double ctrl_post = 0, ctrl_pre_w = 0;
    for (std::size_t k = 0; k < ctrl.size(); ++k) {
        ctrl_post += omega(static_cast<Eigen::Index>(k)) * prob.Y.row(ctrl[k]).tail(t_post).mean();
        ctrl_pre_w +=
            omega(static_cast<Eigen::Index>(k)) * prob.Y.row(ctrl[k]).head(prob.t_pre).dot(lambda);
    }
    return (tr_post - tr_pre_w) - (ctrl_post - ctrl_pre_w);
}

SdidResult estimate_sdid(const SdidProblem& prob) {
    SdidResult res;
    res.weights = solve_weights(prob);
    res.tau = tau_given_weights(prob, res.weights.omega, res.weights.lambda);
    res.pre_mean = prob.Y.row(prob.treated).head(prob.t_pre).mean();
    require(res.pre_mean != 0, "sdid: treated pre-period mean is zero; relative effect undefined");
    res.tau_relative = res.tau / res.pre_mean;

    const auto ctrl = control_rows(prob);
    const Eigen::Index t_post = prob.n_post();
    res.effect_path.resize(t_post);
    const double tr_pre_w = prob.Y.row(prob.treated).head(prob.t_pre).dot(res.weights.lambda);
    for (Eigen::Index s = 0; s < t_post; ++s) {
        const Eigen::Index t = prob.t_pre + s;
        double ctrl_t = 0, ctrl_pre_w = 0;
        for (std::size_t k = 0; k < ctrl.size(); ++k) {
            const double wk = res.weights.omega(static_cast<Eigen::Index>(k));
            ctrl_t += wk * prob.Y(ctrl[k], t);
            ctrl_pre_w += wk * prob.Y.row(ctrl[k]).head(prob.t_pre).dot(res.weights.lambda);
        }
        res.effect_path(s) =
            (prob.Y(prob.treated, t) - tr_pre_w) - (ctrl_t - ctrl_pre_w);
    }
    return res;
}

PlaceboResult placebo_variance(const SdidProblem& prob, std::size_t reps, std::uint64_t seed,
                               bool parallel) {
    prob.validate();
    require(reps >= 2, "sdid.placebo: need at least 2 repetitions, got ", reps);
    const auto ctrl = control_rows(prob);
    require(ctrl.size() >= 2, "sdid.placebo: need at least 2 control units");
    const Eigen::Index t_post = prob.n_post();

    // Control-only matrix; each rep promotes one row to pseudo-treated.
    SdidProblem base;
    base.week_starts = prob.week_starts;
    base.t_pre = prob.t_pre;
    base.zeta_override = prob.zeta_override;
    base.units.reserve(ctrl.size());
    base.Y.resize(static_cast<Eigen::Index>(ctrl.size()), prob.Y.cols());
    for (std::size_t k = 0; k < ctrl.size(); ++k) {
        base.units.push_back(prob.units[static_cast<std::size_t>(ctrl[k])]);
        base.Y.row(static_cast<Eigen::Index>(k)) = prob.Y.row(ctrl[k]);
    }

    std::vector<double> taus(reps, 0.0);
    std::vector<double> rel(reps, 0.0);
    Eigen::MatrixXd paths(static_cast<Eigen::Index>(reps), t_post);

    const auto run_rep = [&](std::size_t r) {
        Rng rng(derive_stream(seed, r));
        SdidProblem rep = base;
        rep.treated = static_cast<Eigen::Index>(rng.below(ctrl.size()));
        const SdidResult rr = estimate_sdid(rep);
        taus[r] = rr.tau;
        rel[r] = rr.tau_relative;
        paths.row(static_cast<Eigen::Index>(r)) = rr.effect_path.transpose();
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t r = 0; r < reps; ++r) run_rep(r);
    } else {
        for (std::size_t r = 0; r < reps; ++r) run_rep(r);
    }

    const auto var_of = [](const std::vector<double>& v) {
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return ss / static_cast<double>(v.size());  // placebo variance uses 1/B
    };

    PlaceboResult out;
    out.reps = reps;
    out.se = std::sqrt(var_of(taus));
    out.se_relative = std::sqrt(var_of(rel));
    out.path_se.resize(t_post);
    for (Eigen::Index s = 0; s < t_post; ++s) {
        std::vector<double> col(reps);
        for (std::size_t r = 0; r < reps; ++r) col[r] = paths(static_cast<Eigen::Index>(r), s);
        out.path_se(s) = std::sqrt(var_of(col));
    }
    return out;
}

ResidualizeResult residualize_covariates(const SdidProblem& prob,
                                         const std::vector<Eigen::MatrixXd>& covariates,
                                         const std::vector<std::string>& names) {
    prob.validate();
    require(!covariates.empty(), "sdid.residualize: no covariates given");
    require(names.size() == covariates.size(), "sdid.residualize: names/covariates mismatch");
    const Eigen::Index n = prob.Y.rows(), t = prob.Y.cols();
    for (std::size_t k = 0; k < covariates.size(); ++k)
        require(covariates[k].rows() == n && covariates[k].cols() == t,
                "sdid.residualize: covariate ", names[k], " shape mismatch");

    // Fitting cells: everything except the treated unit's post period.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index s = 0; s < t; ++s)
            if (i != prob.treated || s < prob.t_pre) cells.emplace_back(i, s);

    const auto k_cov = static_cast<Eigen::Index>(covariates.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(cells.size()), k_cov);
    Eigen::VectorXd y(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t r = 0; r < cells.size(); ++r) {
        const auto [i, s] = cells[r];
        y(static_cast<Eigen::Index>(r)) = prob.Y(i, s);
        for (Eigen::Index k = 0; k < k_cov; ++k)
            X(static_cast<Eigen::Index>(r), k) = covariates[static_cast<std::size_t>(k)](i, s);
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k_cov) {
        // Columns pivoted beyond the rank are the linearly dependent ones.
        std::string cols;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < k_cov; ++j) {
            if (!cols.empty()) cols += ", ";
            cols += names[static_cast<std::size_t>(perm(j))];
        }
        fail("sdid.residualize: covariates are rank-deficient; dependent columns: ", cols);
    }

    ResidualizeResult res;
    res.gamma = qr.solve(y);
    res.Y_adj = prob.Y;
    for (Eigen::Index k = 0; k < k_cov; ++k)
        res.Y_adj -= res.gamma(k) * covariates[static_cast<std::size_t>(k)];
    return res;
}

SdidResult placebo_in_time(const SdidProblem& prob, Eigen::Index pseudo_t_pre) {
    prob.validate();
    require(pseudo_t_pre >= 1 &&
                pseudo_t_pre < static_cast<Eigen::Index>(prob.week_starts.size()),
            "sdid.placebo_in_time: pseudo treatment week outside the panel");
    require(pseudo_t_pre <= prob.t_pre,
            "sdid.placebo_in_time: pseudo treatment must not follow the true one");
    SdidProblem shifted = prob;
    shifted.t_pre = pseudo_t_pre;
    return estimate_sdid(shifted);
}

std::string write_effect_path(const SdidProblem& prob, const SdidResult& res,
                              const PlaceboResult* placebo) {
    std::string out = "week_start,effect,ci_low,ci_high\n";
    const Eigen::Index t_post = prob.n_post();
    for (Eigen::Index s = 0; s < t_post; ++s) {
        const double eff = res.effect_path(s);
        const double half = placebo ? 1.959963984540054 * placebo->path_se(s) : 0.0;
        out += format_date(prob.week_starts[static_cast<std::size_t>(prob.t_pre + s)]);
        out += ',';
        out += format_double(eff);
        out += ',';
        out += format_double(eff - half);
        out += ',';
        out += format_double(eff + half);
        out += '\n';
    }
    return out;
}

}  // namespace vflow::sdid
