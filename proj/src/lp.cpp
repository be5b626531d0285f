#include "herdsim/lp.hpp"

#include <cmath>

namespace herdsim::lp {

namespace {
constexpr double kPivotTol = 1e-10;

// Canonical form min c.x, A x <= b, x >= 0 after the bound transform.
struct Canonical {
    std::vector<double> c;
    std::vector<std::vector<double>> rows;
    std::vector<double> b;
    double obj_const = 0.0;
    // original var -> (canonical index, sign, offset): x_orig = sign * x_can + offset,
    // split vars use a second canonical index with the opposite sign.
    struct Map {
        int idx = -1;
        int idx_neg = -1;
        double sign = 1.0;
        double offset = 0.0;
    };
    std::vector<Map> map;
};

Canonical canonicalize(const LinearProgram& p) {
    const int n = p.n_vars();
    Canonical cf;
    cf.map.resize(n);
    int nc = 0;
    for (int j = 0; j < n; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        if (std::isfinite(lo)) {
            cf.map[j] = {nc++, -1, 1.0, lo};
        } else if (std::isfinite(hi)) {
            cf.map[j] = {nc++, -1, -1.0, hi};
        } else {
            cf.map[j].idx = nc++;
            cf.map[j].idx_neg = nc++;
            cf.map[j].sign = 1.0;
            cf.map[j].offset = 0.0;
        }
    }
    cf.c.assign(nc, 0.0);
    for (int j = 0; j < n; ++j) {
        const auto& mp = cf.map[j];
        cf.obj_const += p.objective[j] * mp.offset;
        cf.c[mp.idx] += p.objective[j] * mp.sign;
        if (mp.idx_neg >= 0) cf.c[mp.idx_neg] -= p.objective[j];
    }
    auto add_row = [&](const std::vector<std::pair<int, double>>& coef, double ub) {
        std::vector<double> row(nc, 0.0);
        for (auto& [idx, v] : coef) row[idx] += v;
        cf.rows.push_back(std::move(row));
        cf.b.push_back(ub);
    };
    for (int r = 0; r < p.A.rows; ++r) {
        std::vector<std::pair<int, double>> coef;
        double ub = p.b[r];
        for (int j = 0; j < n; ++j) {
            double a = p.A.at(r, j);
            if (a == 0.0) continue;
            const auto& mp = cf.map[j];
            ub -= a * mp.offset;
            coef.emplace_back(mp.idx, a * mp.sign);
            if (mp.idx_neg >= 0) coef.emplace_back(mp.idx_neg, -a);
        }
        add_row(coef, ub);
    }
    // finite two-sided bounds become explicit rows in the shifted variable
    for (int j = 0; j < n; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        if (std::isfinite(lo) && std::isfinite(hi)) {
            if (hi < lo) throw MalformedProgram("upper bound below lower bound");
            add_row({{cf.map[j].idx, 1.0}}, hi - lo);
        }
    }
    return cf;
}

class Tableau {
public:
    Tableau(const Canonical& cf) : n_(static_cast<int>(cf.c.size())), m_(static_cast<int>(cf.rows.size())) {
        n_art_ = 0;
        for (double bi : cf.b)
            if (bi < 0) ++n_art_;
        cols_ = n_ + m_ + n_art_ + 1;
        t_.assign(static_cast<size_t>(m_ + 1) * cols_, 0.0);
        basis_.resize(m_);
        int art = 0;
        for (int i = 0; i < m_; ++i) {
            double sgn = cf.b[i] < 0 ? -1.0 : 1.0;
            for (int j = 0; j < n_; ++j) at(i, j) = sgn * cf.rows[i][j];
            at(i, n_ + i) = sgn;  // slack
            rhs(i) = sgn * cf.b[i];
            if (sgn < 0) {
                at(i, n_ + m_ + art) = 1.0;
                basis_[i] = n_ + m_ + art;
                ++art;
            } else {
                basis_[i] = n_ + i;
            }
        }
    }

    double& at(int r, int c) { return t_[static_cast<size_t>(r) * cols_ + c]; }
    double& rhs(int r) { return at(r, n_vars_total()); }
    double& zrow(int c) { return at(m_, c); }
    int n_vars_total() const { return n_ + m_ + n_art_; }
    int n_structural() const { return n_; }
    int n_rows() const { return m_; }
    int n_artificials() const { return n_art_; }
    int basis(int r) const { return basis_[r]; }
    bool is_artificial(int v) const { return v >= n_ + m_; }

    void pivot(int r, int c) {
        double piv = at(r, c);
        for (int j = 0; j <= n_vars_total(); ++j) at(r, j) /= piv;
        for (int i = 0; i <= m_; ++i) {
            if (i == r) continue;
            double f = at(i, c);
            if (f == 0.0) continue;
            for (int j = 0; j <= n_vars_total(); ++j) at(i, j) -= f * at(r, j);
        }
        basis_[r] = c;
    }

    // Bland: entering = lowest-index eligible column, leaving = lowest basis
    // variable among minimum-ratio rows.
    enum class Step { Optimal, Unbounded, Pivoted };
    Step step(const std::vector<bool>& allowed) {
        int enter = -1;
        for (int j = 0; j < n_vars_total(); ++j) {
            if (!allowed[j]) continue;
            if (zrow(j) < -kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return Step::Optimal;
        int leave = -1;
        double best = 0.0;
        for (int i = 0; i < m_; ++i) {
            double a = at(i, enter);
            if (a <= kPivotTol) continue;
            double ratio = rhs(i) / a;
            if (leave < 0 || ratio < best - kPivotTol ||
                (std::fabs(ratio - best) <= kPivotTol && basis_[i] < basis_[leave])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) return Step::Unbounded;
        pivot(leave, enter);
        return Step::Pivoted;
    }

private:
    int n_, m_, n_art_, cols_;
    std::vector<double> t_;
    std::vector<int> basis_;
};

}  // namespace

void LinearProgram::add_row(const std::vector<double>& coef, double ub) {
    if (static_cast<int>(coef.size()) != n_vars())
        throw MalformedProgram("row length does not match variable count");
    Matrix na(A.rows + 1, A.cols);
    na.a.assign(A.a.begin(), A.a.end());
    na.a.insert(na.a.end(), coef.begin(), coef.end());
    A = std::move(na);
    b.push_back(ub);
}

LpSolution solve(const LinearProgram& p, long max_pivots) {
    const int n = p.n_vars();
    if (p.A.cols != n || static_cast<int>(p.b.size()) != p.A.rows ||
        static_cast<int>(p.lower.size()) != n || static_cast<int>(p.upper.size()) != n)
        throw MalformedProgram("inconsistent program dimensions");
    for (int j = 0; j < n; ++j)
        if (std::isfinite(p.lower[j]) && std::isfinite(p.upper[j]) && p.lower[j] > p.upper[j])
            throw MalformedProgram("lower bound exceeds upper bound");

    Canonical cf = canonicalize(p);
    Tableau tab(cf);
    const int total = tab.n_vars_total();
    long pivots = 0;

    // phase 1: minimize the artificial sum
    if (tab.n_artificials() > 0) {
        for (int j = tab.n_structural() + tab.n_rows(); j < total; ++j) tab.zrow(j) = 1.0;
        for (int i = 0; i < tab.n_rows(); ++i) {
            if (!tab.is_artificial(tab.basis(i))) continue;
            for (int j = 0; j <= total; ++j) tab.zrow(j) -= tab.at(i, j);
        }
        std::vector<bool> allowed(total, true);
        for (;;) {
            if (pivots++ >= max_pivots) return {LpStatus::IterationLimit, {}, 0.0};
            auto s = tab.step(allowed);
            if (s == Tableau::Step::Optimal) break;
            if (s == Tableau::Step::Unbounded) break;  // cannot happen: bounded below by 0
        }
        double art_sum = -tab.zrow(total);
        if (art_sum > 1e-8) return {LpStatus::Infeasible, {}, 0.0};
        // drive surviving zero-level artificials out of the basis
        for (int i = 0; i < tab.n_rows(); ++i) {
            if (!tab.is_artificial(tab.basis(i))) continue;
            int piv = -1;
            for (int j = 0; j < tab.n_structural() + tab.n_rows(); ++j)
                if (std::fabs(tab.at(i, j)) > kPivotTol) {
                    piv = j;
                    break;
                }
            if (piv >= 0) tab.pivot(i, piv);
        }
        // reset the objective row
        for (int j = 0; j <= total; ++j) tab.zrow(j) = 0.0;
    }

    // phase 2 objective, priced out over the current basis
    for (int j = 0; j < tab.n_structural(); ++j) tab.zrow(j) = cf.c[j];
    for (int i = 0; i < tab.n_rows(); ++i) {
        int bv = tab.basis(i);
        if (bv < tab.n_structural() && cf.c[bv] != 0.0) {
            double f = cf.c[bv];
            for (int j = 0; j <= total; ++j) tab.zrow(j) -= f * tab.at(i, j);
        }
    }
    std::vector<bool> allowed(total, true);
    for (int j = tab.n_structural() + tab.n_rows(); j < total; ++j) allowed[j] = false;
    for (;;) {
        if (pivots++ >= max_pivots) return {LpStatus::IterationLimit, {}, 0.0};
        auto s = tab.step(allowed);
        if (s == Tableau::Step::Optimal) break;
        if (s == Tableau::Step::Unbounded) return {LpStatus::Unbounded, {}, 0.0};
    }

    std::vector<double> xc(tab.n_structural(), 0.0);
    for (int i = 0; i < tab.n_rows(); ++i)
        if (tab.basis(i) < tab.n_structural()) xc[tab.basis(i)] = tab.rhs(i);

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.point.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto& mp = cf.map[j];
        double v = mp.offset + mp.sign * xc[mp.idx];
        if (mp.idx_neg >= 0) v -= xc[mp.idx_neg];
        sol.point[j] = v;
    }
    sol.objective_value = cf.obj_const;
    for (int j = 0; j < static_cast<int>(cf.c.size()); ++j) sol.objective_value += cf.c[j] * xc[j];
    return sol;
}

LpSolution solve_feasibility(const Matrix& A, const std::vector<double>& b,
                             const std::vector<double>& lower, const std::vector<double>& upper,
                             long max_pivots) {
    LinearProgram p;
    p.objective.assign(A.cols, 0.0);
    p.A = A;
    p.b = b;
    p.lower = lower;
    p.upper = upper;
    return solve(p, max_pivots);
}

}  // namespace herdsim::lp
