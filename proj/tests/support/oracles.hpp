#pragma once

// Reference implementations kept deliberately naive and structurally different
// from the production code: the matcher oracle is a literal O(n^2) walk over
// the sequential pairing description, and the covariance oracle redoes the
// sandwich algebra in long double with Gauss-Jordan inversion. Tests freeze
// these as the ground truth the fast paths must reproduce.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"

namespace oracle {

struct Pair {
    std::size_t i = 0, j = 0;
    double p = 1.0;
};

inline std::vector<Pair> brute_force_matches(const std::vector<vflow::ingest::TradeRecord>& L,
                                             const vflow::matcher::MatchParams& P) {
    const std::size_t n = L.size();
    std::vector<char> used(n, 0);
    std::vector<Pair> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < P.burn_in || used[i]) continue;
        long long n_window = 0;
        std::size_t cand = n;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (L[j].timestamp - L[i].timestamp > P.window_seconds) break;
            ++n_window;
            if (cand == n && !used[j] && L[j].size_satoshi == L[i].size_satoshi) cand = j;
        }
        if (cand == n) continue;
        long long seen = 0;
        for (std::size_t k = 0; k < i; ++k)
            if (L[k].size_satoshi == L[i].size_satoshi) ++seen;
        const double p_i = static_cast<double>(seen + 1) / static_cast<double>(i + 1);
        const double p = 1.0 - std::pow(1.0 - p_i, static_cast<double>(n_window));
        used[i] = used[cand] = 1;
        if (p <= P.alpha) out.push_back({i, cand, p});
    }
    return out;
}

// Dense row-major matrix tools in long double.
using LVec = std::vector<long double>;
using LMat = std::vector<LVec>;

inline LMat lmat(std::size_t r, std::size_t c) { return LMat(r, LVec(c, 0.0L)); }

inline LMat linverse(LMat a) {
    const std::size_t n = a.size();
    LMat inv = lmat(n, n);
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0L;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(static_cast<double>(a[r][col])) >
                std::fabs(static_cast<double>(a[piv][col])))
                piv = r;
        std::swap(a[col], a[piv]);
        std::swap(inv[col], inv[piv]);
        const long double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const long double f = a[r][col];
            if (f == 0.0L) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

// Cluster sandwich A^{-1} B A^{-1} * G/(G-1) where A = X' diag(w) X and the
// cluster scores are sums of x_i * resid_i. For the Poisson family w = mu and
// resid = y - mu; for least squares w = 1 and resid = y - X beta.
inline LMat cluster_sandwich(const LMat& X, const LVec& weight, const LVec& resid,
                             const std::vector<int>& cluster, int n_clusters) {
    const std::size_t n = X.size(), k = X[0].size();
    LMat A = lmat(k, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) A[a][b] += weight[i] * X[i][a] * X[i][b];
    LMat scores = lmat(static_cast<std::size_t>(n_clusters), k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            scores[static_cast<std::size_t>(cluster[i])][a] += X[i][a] * resid[i];
    LMat B = lmat(k, k);
    for (int g = 0; g < n_clusters; ++g)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                B[a][b] += scores[static_cast<std::size_t>(g)][a] *
                           scores[static_cast<std::size_t>(g)][b];
    const LMat Ainv = linverse(A);
    LMat AB = lmat(k, k), V = lmat(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            for (std::size_t c = 0; c < k; ++c) AB[a][b] += Ainv[a][c] * B[c][b];
    const long double corr =
        static_cast<long double>(n_clusters) / static_cast<long double>(n_clusters - 1);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c) V[a][b] += AB[a][c] * Ainv[c][b];
            V[a][b] *= corr;
        }
    return V;
}

// Projected gradient descent onto the simplex; independent of the production
// Frank-Wolfe solver. Minimizes ||A w - b||^2 + ridge ||w||^2.
inline std::vector<double> simplex_ls_reference(const std::vector<std::vector<double>>& cols,
                                                const std::vector<double>& b, double ridge,
                                                int iters = 200000) {
    const std::size_t k = cols.size(), m = b.size();
    std::vector<double> w(k, 1.0 / static_cast<double>(k));
    // Lipschitz bound via sum of squared column norms.
    double lip = 2.0 * ridge;
    for (const auto& col : cols) {
        double s = 0;
        for (double v : col) s += v * v;
        lip += 2.0 * s;
    }
    const double step = 1.0 / lip;
    std::vector<double> r(m), g(k), z(k), sorted(k);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t t = 0; t < m; ++t) {
            r[t] = -b[t];
            for (std::size_t j = 0; j < k; ++j) r[t] += cols[j][t] * w[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = 2.0 * ridge * w[j];
            for (std::size_t t = 0; t < m; ++t) g[j] += 2.0 * cols[j][t] * r[t];
        }
        for (std::size_t j = 0; j < k; ++j) z[j] = w[j] - step * g[j];
        // Euclidean projection onto the simplex (sort-based): theta is the
        // shift at the largest rho with sorted[rho-1] still above it.
        sorted = z;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        double cum = 0, theta = 0;
        for (std::size_t j = 0; j < k; ++j) {
            cum += sorted[j];
            const double t = (cum - 1.0) / static_cast<double>(j + 1);
            if (sorted[j] > t) theta = t;
        }
        double moved = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double nw = std::max(0.0, z[j] - theta);
            moved += std::fabs(nw - w[j]);
            w[j] = nw;
        }
        if (moved < 1e-14) break;
    }
    return w;
}

}  // namespace oracle
