#include "herdsim/core.hpp"

#include <cmath>
#include <string>

namespace herdsim {

namespace {
constexpr double kStochasticTol = 1e-9;
constexpr double kOrderSlack = 1e-12;
}  // namespace

Belief validate_belief(const std::vector<double>& raw) {
    if (raw.size() < 2) throw NotASimplexPoint("belief needs at least 2 states");
    std::vector<double> p(raw);
    double sum = 0.0;
    for (double& v : p) {
        if (!std::isfinite(v)) throw NotASimplexPoint("non-finite belief entry");
        if (v < -1e-12) throw NotASimplexPoint("negative belief entry " + std::to_string(v));
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw NotASimplexPoint("belief sums to " + std::to_string(sum));
    for (double& v : p) v /= sum;
    return Belief(std::move(p));
}

ObservationModel::ObservationModel(Matrix likelihood) : lik_(std::move(likelihood)) {
    if (lik_.rows < 2 || lik_.cols < 2)
        throw DimensionMismatch("observation model needs X >= 2 and Y >= 2");
    for (int x = 0; x < lik_.rows; ++x) {
        double s = 0.0;
        for (int y = 0; y < lik_.cols; ++y) {
            double v = lik_.at(x, y);
            if (!(v >= 0.0)) throw DimensionMismatch("negative likelihood entry");
            s += v;
        }
        if (std::fabs(s - 1.0) > kStochasticTol)
            throw DimensionMismatch("likelihood row " + std::to_string(x) + " sums to " +
                                    std::to_string(s));
    }
}

CostSpec::CostSpec(Matrix table) : t_(std::move(table)) {
    if (t_.rows < 1 || t_.cols < 1) throw DimensionMismatch("empty cost table");
    for (double v : t_.a)
        if (!std::isfinite(v)) throw DimensionMismatch("non-finite cost entry");
}

CostSpec CostSpec::zero_one(int n) {
    Matrix m(n, n, 1.0);
    for (int i = 0; i < n; ++i) m.at(i, i) = 0.0;
    return CostSpec(std::move(m));
}

void IncentiveCostParams::validate() const {
    if (alpha.size() != delta.size() || alpha.size() != omega.size() || alpha.size() < 2)
        throw DimensionMismatch("incentive params need equal per-action lengths >= 2");
    for (double a : alpha)
        if (!(a > 0.0)) throw DimensionMismatch("alpha must be strictly positive");
    for (double d : delta)
        if (!(d > 0.0)) throw DimensionMismatch("delta must be strictly positive");
    if (omega[1] == omega[0]) throw DimensionMismatch("omega entries must differ");
}

bool is_tp2(const ObservationModel& m) {
    const Matrix& a = m.matrix();
    for (int i = 0; i < a.rows; ++i)
        for (int j = i + 1; j < a.rows; ++j)
            for (int k = 0; k < a.cols; ++k)
                for (int l = k + 1; l < a.cols; ++l)
                    if (a.at(i, k) * a.at(j, l) - a.at(i, l) * a.at(j, k) < -kOrderSlack)
                        return false;
    return true;
}

bool mlr_dominates(const Belief& p1, const Belief& p2) {
    if (p1.size() != p2.size()) throw DimensionMismatch("mlr_dominates: unequal lengths");
    for (int i = 0; i < p1.size(); ++i)
        for (int j = i + 1; j < p1.size(); ++j)
            if (p1[i] * p2[j] > p1[j] * p2[i] + kOrderSlack) return false;
    return true;
}

bool fosd_dominates(const Belief& p1, const Belief& p2) {
    if (p1.size() != p2.size()) throw DimensionMismatch("fosd_dominates: unequal lengths");
    double t1 = 0.0, t2 = 0.0;
    for (int j = p1.size() - 1; j >= 0; --j) {
        t1 += p1[j];
        t2 += p2[j];
        if (t1 < t2 - kOrderSlack) return false;
    }
    return true;
}

StructuralReport check_structural_assumptions(const CostSpec& c, const ObservationModel& m,
                                              double rho) {
    if (c.n_states() != m.n_states())
        throw DimensionMismatch("cost/observation state dimensions differ");
    const int X = c.n_states();
    const int U = c.n_actions();
    const int Y = m.n_obs();
    StructuralReport rep;

    for (int u = 0; u < U && rep.s1.ok; ++u)
        for (int i = 0; i + 1 < X; ++i)
            if (c.cost(i, u) - c.cost(i + 1, u) < -kOrderSlack) {
                rep.s1 = {false, i, u};
                break;
            }

    const int last = X - 1;
    for (int u = 0; u < U && rep.s2.ok; ++u)
        for (int i = 0; i < X; ++i) {
            double rhs = 0.0;
            for (int y = 0; y < Y; ++y)
                rhs += c.cost(last, u) * m.p(last, y) - c.cost(i, u) * m.p(i, y);
            if (c.cost(last, u) - c.cost(i, u) < (1.0 - rho) * rhs - kOrderSlack) {
                rep.s2 = {false, i, u};
                break;
            }
        }

    for (int u = 0; u < U && rep.s3.ok; ++u)
        for (int i = 0; i < X; ++i) {
            double lhs = 0.0;
            for (int y = 0; y < Y; ++y)
                lhs += c.cost(0, u) * m.p(0, y) - c.cost(i, u) * m.p(i, y);
            if ((1.0 - rho) * lhs < c.cost(0, u) - c.cost(i, u) - kOrderSlack) {
                rep.s3 = {false, i, u};
                break;
            }
        }

    if (!is_tp2(m)) rep.s4 = {false, -1, -1};
    return rep;
}

}  // namespace herdsim
