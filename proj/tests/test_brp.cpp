#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "herdsim/brp.hpp"
#include "herdsim/rng.hpp"

using namespace herdsim;
using namespace herdsim::brp;

namespace {

Matrix diag_obs(double d, int n) {
    Matrix m(n, n, (1.0 - d) / (n - 1));
    for (int i = 0; i < n; ++i) m.at(i, i) = d;
    return m;
}

Matrix identity_utility(int n) {
    Matrix m(n, n, 0.0);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Belief uniform(int n) { return validate_belief(std::vector<double>(static_cast<size_t>(n), 1.0 / n)); }

BrpDataset synthetic_ribum(int n_samples, std::uint64_t seed) {
    std::vector<Matrix> r{identity_utility(2), identity_utility(2)};
    std::vector<ObservationModel> b{ObservationModel(diag_obs(0.9, 2)),
                                    ObservationModel(diag_obs(0.7, 2))};
    return generate_ribum_dataset(r, b, uniform(2), n_samples, seed);
}

BrpDataset flat_dataset() {
    Matrix half(2, 2, 0.5);
    return BrpDataset(uniform(2), {half, half});
}

double nias_row_value(const BrpDataset& d, const Matrix& r, int m, int u, int ubar) {
    Matrix post = d.posterior(m);
    double v = 0.0;
    for (int x = 0; x < d.n_states(); ++x) v += post.at(x, u) * (r.at(x, ubar) - r.at(x, u));
    return v;
}

}  // namespace

TEST_CASE("empirical_dataset examples") {
    std::vector<Sample> perfect;
    for (int i = 0; i < 100; ++i) perfect.push_back({0, i % 2, i % 2});
    BrpDataset d = empirical_dataset(perfect, uniform(2), 1, 2, 2);
    CHECK(d.action_given_state[0].at(0, 0) == 1.0);
    CHECK(d.action_given_state[0].at(1, 1) == 1.0);

    std::vector<Sample> alternating;
    for (int i = 0; i < 100; ++i) alternating.push_back({0, i % 2, (i / 2) % 2});
    BrpDataset a = empirical_dataset(alternating, uniform(2), 1, 2, 2);
    CHECK(a.action_given_state[0].at(0, 0) == doctest::Approx(0.5));
    CHECK(a.action_given_state[0].at(1, 0) == doctest::Approx(0.5));

    std::vector<Sample> missing{{0, 0, 0}};
    CHECK_THROWS_AS(empirical_dataset(missing, uniform(2), 1, 2, 2), EmptyCell);
}

TEST_CASE("nias row structure") {
    Matrix ident(2, 2);
    ident.at(0, 0) = ident.at(1, 1) = 1.0;
    BrpDataset d(uniform(2), {ident});
    auto rows = nias_constraints(d, -1, 0.0);
    CHECK(rows.size() == 2);  // |U|(|U|-1) per environment

    // identity posteriors with the identity utility: every row evaluates to -1
    Matrix r = identity_utility(2);
    CHECK(nias_row_value(d, r, 0, 0, 1) == doctest::Approx(-1.0));
    CHECK(nias_row_value(d, r, 0, 1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("equal posteriors force the NIAS margin to zero") {
    BrpDataset d = flat_dataset();
    // the (u, ubar) and (ubar, u) row values cancel for any utility
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        Matrix r(2, 2);
        for (int i = 0; i < 4; ++i) r.a[static_cast<size_t>(i)] = rng.uniform01();
        double a = nias_row_value(d, r, 0, 0, 1);
        double b = nias_row_value(d, r, 0, 1, 0);
        CHECK(std::fabs(a + b) <= 1e-12);
    }
}

TEST_CASE("niac linearization counts") {
    BrpDataset d = flat_dataset();
    ConstraintSystem cs = niac_constraints(d, -1, 0.0);
    CHECK(cs.niac_pairs.size() == 2);
    CHECK(cs.niac_epigraph.size() == 8);
    CHECK(cs.n_aux == 4);
    CHECK_THROWS_AS(niac_constraints(BrpDataset(uniform(2), {Matrix(2, 2, 0.5)}), -1, 0.0),
                    TooFewEnvironments);
}

TEST_CASE("paper-level constraint counts match the scaling remark") {
    for (int M : {2, 3}) {
        for (int U : {2, 3}) {
            int X = U;
            std::vector<Matrix> conds;
            Rng rng(static_cast<std::uint64_t>(M * 10 + U));
            for (int m = 0; m < M; ++m) {
                Matrix c(X, U);
                for (int x = 0; x < X; ++x) {
                    double s = 0.0;
                    for (int u = 0; u < U; ++u) {
                        c.at(x, u) = rng.uniform01() + 0.1;
                        s += c.at(x, u);
                    }
                    for (int u = 0; u < U; ++u) c.at(x, u) /= s;
                }
                conds.push_back(c);
            }
            BrpDataset d(uniform(X), conds);
            auto nias = nias_constraints(d, -1, 0.0);
            ConstraintSystem cs = niac_constraints(d, -1, 0.0);
            int paper_rows = static_cast<int>(nias.size() + cs.niac_pairs.size());
            CHECK(paper_rows == M * M + M * (U * U - U - 1));
            CHECK(cs.n_r + cs.n_z == M * (U * X + 1));
        }
    }
}

TEST_CASE("r = 0, z = 0 satisfies both conditions with zero slack") {
    BrpDataset d = synthetic_ribum(2000, 42);
    std::vector<Matrix> zero{Matrix(2, 2, 0.0), Matrix(2, 2, 0.0)};
    Margins m = evaluate_margins(d, zero, {0.0, 0.0});
    CHECK(m.eps1 == doctest::Approx(0.0));
    CHECK(m.eps2 == doctest::Approx(0.0));
    CHECK(reconstruct_info_cost(d, zero, {0.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("feasibility verdicts") {
    BrpDataset good = synthetic_ribum(20000, 7);
    FeasibilityVerdict v = feasibility_check(good);
    CHECK(v.verdict == Feasibility::Ribum);
    REQUIRE(v.witness.has_value());
    Margins direct = evaluate_margins(good, v.witness->utilities, v.witness->info_costs);
    CHECK(direct.eps1 >= 1e-4 - 1e-7);
    CHECK(direct.eps2 >= 1e-4 - 1e-7);

    CHECK(feasibility_check(flat_dataset()).verdict == Feasibility::NotRibum);

    BrpDataset single(uniform(2), {Matrix(2, 2, 0.5)});
    CHECK_THROWS_AS(feasibility_check(single), TooFewEnvironments);
}

TEST_CASE("max-margin reconstruction on synthetic data") {
    BrpDataset d = synthetic_ribum(20000, 11);
    ReconstructionResult res = max_margin_reconstruct(d);
    CHECK(res.margins.eps1 > 0.0);
    CHECK(res.margins.eps2 > 0.0);
    Margins direct = evaluate_margins(d, res.utilities, res.info_costs);
    CHECK(direct.eps1 >= res.margins.eps1 - 1e-7);
    CHECK(direct.eps2 >= res.margins.eps2 - 1e-7);
    CHECK(res.reconstructed_acquisition_cost >=
          *std::max_element(res.info_costs.begin(), res.info_costs.end()) - 1e-12);

    CHECK_THROWS_AS(max_margin_reconstruct(flat_dataset()), ReconstructionInfeasible);
}

TEST_CASE("sparse reconstruction trades margin for mass") {
    BrpDataset d = synthetic_ribum(20000, 13);
    ReconstructionResult mm = max_margin_reconstruct(d);
    double l1_mm = 0.0;
    for (const auto& r : mm.utilities)
        for (double v : r.a) l1_mm += std::fabs(v);

    ReconstructionResult sp = sparse_reconstruct(d, mm.margins.eps1 / 2, mm.margins.eps2 / 2);
    double l1_sp = 0.0;
    for (const auto& r : sp.utilities)
        for (double v : r.a) l1_sp += std::fabs(v);
    CHECK(l1_sp <= l1_mm + 1e-9);
    Margins direct = evaluate_margins(d, sp.utilities, sp.info_costs);
    CHECK(direct.eps1 >= mm.margins.eps1 / 2 - 1e-7);
    CHECK(direct.eps2 >= mm.margins.eps2 / 2 - 1e-7);

    CHECK_THROWS_AS(sparse_reconstruct(d, mm.margins.eps1 * 10 + 1.0, mm.margins.eps2),
                    ReconstructionInfeasible);
}

TEST_CASE("sparse reconstruction collapses to near-zero utilities at tiny margins") {
    // env 0 always plays action 0; env 1 is informative. Tiny required margins
    // admit a solution whose every entry is at the margin scale.
    Matrix only0(2, 2, 0.0);
    only0.at(0, 0) = only0.at(1, 0) = 1.0;
    Matrix informative(2, 2);
    informative.at(0, 0) = 0.9;
    informative.at(0, 1) = 0.1;
    informative.at(1, 0) = 0.1;
    informative.at(1, 1) = 0.9;
    BrpDataset d(uniform(2), {only0, informative});
    ReconstructionResult res = sparse_reconstruct(d, 1e-9, 1e-9);
    int near_zero = 0;
    double l1 = 0.0;
    for (const auto& r : res.utilities)
        for (double v : r.a) {
            l1 += std::fabs(v);
            if (std::fabs(v) <= 1e-6) ++near_zero;
        }
    CHECK(near_zero >= 2 * 2 * 2 - 1);
    CHECK(l1 > 0.0);
    CHECK(l1 < 1e-6);
}

TEST_CASE("reconstruct_info_cost reduces to max z when chosen actions are optimal") {
    Matrix ident(2, 2);
    ident.at(0, 0) = ident.at(1, 1) = 1.0;
    BrpDataset d(uniform(2), {ident, ident});
    std::vector<Matrix> r{identity_utility(2), identity_utility(2)};
    CHECK(reconstruct_info_cost(d, r, {0.25, 0.5}) == doctest::Approx(0.5));
    std::vector<Matrix> zero{Matrix(2, 2, 0.0), Matrix(2, 2, 0.0)};
    CHECK(reconstruct_info_cost(d, zero, {0.25, 0.5}) == doctest::Approx(0.5));
}

TEST_CASE("scale invariance of NIAS satisfaction") {
    Rng rng(17);
    BrpDataset d = synthetic_ribum(5000, 19);
    for (int t = 0; t < 30; ++t) {
        Matrix r(2, 2);
        for (int i = 0; i < 4; ++i) r.a[static_cast<size_t>(i)] = rng.uniform01();
        double a = 0.3 + rng.uniform01();
        double b = rng.uniform01() - 0.5;
        Matrix r2 = r;
        for (int i = 0; i < 4; ++i) r2.a[static_cast<size_t>(i)] = a * r.a[static_cast<size_t>(i)] + b;
        for (int m = 0; m < 2; ++m)
            for (int u = 0; u < 2; ++u)
                for (int ub = 0; ub < 2; ++ub) {
                    if (u == ub) continue;
                    double v1 = nias_row_value(d, r, m, u, ub);
                    double v2 = nias_row_value(d, r2, m, u, ub);
                    CHECK(v2 == doctest::Approx(a * v1).epsilon(1e-9));
                }
    }
}

TEST_CASE("gross_expected_utility examples") {
    Belief u = uniform(2);
    Matrix r = identity_utility(2);

    Matrix flat(2, 2, 0.5);  // uninformative
    CHECK(gross_expected_utility(r, ObservationModel(flat), u) == doctest::Approx(0.5));

    Matrix ident(2, 2);
    ident.at(0, 0) = ident.at(1, 1) = 1.0;
    CHECK(gross_expected_utility(r, ObservationModel(ident), u) == doctest::Approx(1.0));

    CHECK(gross_expected_utility(r, ObservationModel(diag_obs(0.9, 2)), u) == doctest::Approx(0.9));
}

TEST_CASE("generate_ribum_dataset concentrates near the observation matrix") {
    std::vector<Matrix> r{identity_utility(2), identity_utility(2)};
    std::vector<ObservationModel> b{ObservationModel(diag_obs(0.9, 2)),
                                    ObservationModel(diag_obs(0.9, 2))};
    BrpDataset d = generate_ribum_dataset(r, b, uniform(2), 10000, 33);
    // in this regime the action replays the observation: p(u=x|x) ~ 0.9
    double band = 3.0 * std::sqrt(0.9 * 0.1 / 5000.0);
    for (int m = 0; m < 2; ++m)
        for (int x = 0; x < 2; ++x)
            CHECK(std::fabs(d.action_given_state[static_cast<size_t>(m)].at(x, x) - 0.9) <=
                  band + 0.01);

    Matrix flat(2, 2, 0.5);
    std::vector<ObservationModel> bu{ObservationModel(flat), ObservationModel(flat)};
    BrpDataset du = generate_ribum_dataset(r, bu, uniform(2), 10000, 35);
    for (int m = 0; m < 2; ++m)
        CHECK(std::fabs(du.action_given_state[static_cast<size_t>(m)].at(0, 0) -
                        du.action_given_state[static_cast<size_t>(m)].at(1, 0)) < 0.05);

    CHECK_THROWS_AS(generate_ribum_dataset(r, b, uniform(2), 0, 37), EmptyCell);
}

TEST_CASE("replayed six-state dataset loads and reconstructs diagonally") {
    std::vector<Sample> samples =
        load_samples_csv(std::string(HERDSIM_TEST_DATA_DIR) + "/brp_replay_6state.csv");
    CHECK(samples.size() == 200);
    Matrix prior_m = load_matrix_csv(std::string(HERDSIM_TEST_DATA_DIR) + "/brp_replay_prior.csv");
    BrpDataset d = empirical_dataset(samples, validate_belief(prior_m.a), 2, 6, 6);
    ReconstructionResult res = max_margin_reconstruct(d);
    int diag_hits = 0;
    for (int x = 0; x < 6; ++x) {
        int best = 0;
        for (int uu = 1; uu < 6; ++uu)
            if (res.utilities[0].at(x, uu) > res.utilities[0].at(x, best)) best = uu;
        if (best == x) ++diag_hits;
    }
    CHECK(diag_hits >= 4);
}
