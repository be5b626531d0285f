#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "herdsim/lp.hpp"
#include "herdsim/rng.hpp"

using namespace herdsim;
using namespace herdsim::lp;

namespace {

double residual(const LinearProgram& p, const std::vector<double>& x) {
    double worst = 0.0;
    for (int r = 0; r < p.A.rows; ++r) {
        double ax = 0.0;
        for (int j = 0; j < p.A.cols; ++j) ax += p.A.at(r, j) * x[static_cast<size_t>(j)];
        worst = std::max(worst, ax - p.b[static_cast<size_t>(r)]);
    }
    for (int j = 0; j < p.n_vars(); ++j) {
        if (std::isfinite(p.lower[static_cast<size_t>(j)]))
            worst = std::max(worst, p.lower[static_cast<size_t>(j)] - x[static_cast<size_t>(j)] - 1e-9);
        if (std::isfinite(p.upper[static_cast<size_t>(j)]))
            worst = std::max(worst, x[static_cast<size_t>(j)] - p.upper[static_cast<size_t>(j)] - 1e-9);
    }
    return worst;
}

// vertex-enumeration oracle: try every subset of n active constraints
// (rows and finite bounds), solve, keep the best feasible objective
double brute_force_min(const LinearProgram& p) {
    const int n = p.n_vars();
    struct Plane {
        std::vector<double> a;
        double b;
    };
    std::vector<Plane> planes;
    for (int r = 0; r < p.A.rows; ++r) {
        Plane pl;
        pl.a.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) pl.a[static_cast<size_t>(j)] = p.A.at(r, j);
        pl.b = p.b[static_cast<size_t>(r)];
        planes.push_back(pl);
    }
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(p.lower[static_cast<size_t>(j)])) {
            Plane pl;
            pl.a.assign(static_cast<size_t>(n), 0.0);
            pl.a[static_cast<size_t>(j)] = -1.0;
            pl.b = -p.lower[static_cast<size_t>(j)];
            planes.push_back(pl);
        }
        if (std::isfinite(p.upper[static_cast<size_t>(j)])) {
            Plane pl;
            pl.a.assign(static_cast<size_t>(n), 0.0);
            pl.a[static_cast<size_t>(j)] = 1.0;
            pl.b = p.upper[static_cast<size_t>(j)];
            planes.push_back(pl);
        }
    }
    const int m = static_cast<int>(planes.size());
    double best = kInf;
    std::vector<int> idx(static_cast<size_t>(n));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            // solve the n x n system by Gaussian elimination
            std::vector<std::vector<double>> a(static_cast<size_t>(n),
                                               std::vector<double>(static_cast<size_t>(n) + 1));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) a[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    planes[static_cast<size_t>(idx[static_cast<size_t>(i)])].a[static_cast<size_t>(j)];
                a[static_cast<size_t>(i)][static_cast<size_t>(n)] =
                    planes[static_cast<size_t>(idx[static_cast<size_t>(i)])].b;
            }
            for (int col = 0; col < n; ++col) {
                int piv = -1;
                double mag = 1e-9;
                for (int row = col; row < n; ++row)
                    if (std::fabs(a[static_cast<size_t>(row)][static_cast<size_t>(col)]) > mag) {
                        mag = std::fabs(a[static_cast<size_t>(row)][static_cast<size_t>(col)]);
                        piv = row;
                    }
                if (piv < 0) return;  // singular
                std::swap(a[static_cast<size_t>(col)], a[static_cast<size_t>(piv)]);
                for (int row = 0; row < n; ++row) {
                    if (row == col) continue;
                    double f = a[static_cast<size_t>(row)][static_cast<size_t>(col)] /
                               a[static_cast<size_t>(col)][static_cast<size_t>(col)];
                    for (int j = col; j <= n; ++j)
                        a[static_cast<size_t>(row)][static_cast<size_t>(j)] -=
                            f * a[static_cast<size_t>(col)][static_cast<size_t>(j)];
                }
            }
            std::vector<double> x(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i)
                x[static_cast<size_t>(i)] = a[static_cast<size_t>(i)][static_cast<size_t>(n)] /
                                            a[static_cast<size_t>(i)][static_cast<size_t>(i)];
            for (const auto& pl : planes) {
                double ax = 0.0;
                for (int j = 0; j < n; ++j) ax += pl.a[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
                if (ax > pl.b + 1e-7) return;  // infeasible vertex
            }
            double obj = 0.0;
            for (int j = 0; j < n; ++j) obj += p.objective[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
            best = std::min(best, obj);
            return;
        }
        for (int i = start; i < m; ++i) {
            idx[static_cast<size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("one-variable box") {
    LinearProgram p = LinearProgram::with_vars(1);
    p.objective = {-1.0};
    p.lower = {0.0};
    p.upper = {kInf};
    p.add_row({1.0}, 1.0);  // x <= 1
    LpSolution s = solve(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.point[0] == doctest::Approx(1.0));
    CHECK(s.objective_value == doctest::Approx(-1.0));
}

TEST_CASE("empty feasible set") {
    LinearProgram p = LinearProgram::with_vars(1);
    p.lower = {0.0};
    p.upper = {kInf};
    p.add_row({1.0}, -1.0);  // x <= -1 with x >= 0
    CHECK(solve(p).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded ray") {
    LinearProgram p = LinearProgram::with_vars(1);
    p.objective = {-1.0};
    p.lower = {0.0};
    p.upper = {kInf};
    CHECK(solve(p).status == LpStatus::Unbounded);
}

TEST_CASE("solve_feasibility trio") {
    Matrix a(1, 1);
    a.at(0, 0) = 1.0;
    LpSolution s = solve_feasibility(a, {1.0}, {0.0}, {kInf});
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.point[0] >= -1e-9);
    CHECK(s.point[0] <= 1.0 + 1e-9);

    CHECK(solve_feasibility(a, {-1.0}, {0.0}, {kInf}).status == LpStatus::Infeasible);

    Matrix none(0, 1);
    CHECK(solve_feasibility(none, {}, {-kInf}, {kInf}).status == LpStatus::Optimal);
}

TEST_CASE("malformed programs rejected") {
    LinearProgram p = LinearProgram::with_vars(2);
    CHECK_THROWS_AS(p.add_row({1.0}, 0.0), MalformedProgram);
    p.lower = {0.0, 1.0};
    p.upper = {kInf, 0.5};
    CHECK_THROWS_AS(solve(p), MalformedProgram);
}

TEST_CASE("duality spot-check against vertex enumeration") {
    Rng rng(101);
    int solved = 0;
    while (solved < 50) {
        int n = 2 + rng.uniform_int(4);  // up to 5 vars keeps enumeration fast
        int m = 1 + rng.uniform_int(4);
        LinearProgram p = LinearProgram::with_vars(n);
        for (int j = 0; j < n; ++j) {
            p.objective[static_cast<size_t>(j)] = rng.uniform01() * 2.0 - 1.0;
            p.lower[static_cast<size_t>(j)] = 0.0;
            p.upper[static_cast<size_t>(j)] = 1.0;  // box keeps every instance bounded
        }
        Matrix A(m, n);
        std::vector<double> b(static_cast<size_t>(m));
        for (int r = 0; r < m; ++r) {
            for (int j = 0; j < n; ++j) A.at(r, j) = rng.uniform01() * 2.0 - 1.0;
            b[static_cast<size_t>(r)] = rng.uniform01();  // x = 0 stays feasible
        }
        p.A = A;
        p.b = b;
        LpSolution s = solve(p);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(residual(p, s.point) <= 1e-7);
        double oracle = brute_force_min(p);
        CHECK(s.objective_value == doctest::Approx(oracle).epsilon(1e-6));
        ++solved;
    }
}

TEST_CASE("determinism: identical program, identical bits") {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        int n = 3 + rng.uniform_int(3);
        LinearProgram p = LinearProgram::with_vars(n);
        for (int j = 0; j < n; ++j) {
            p.objective[static_cast<size_t>(j)] = rng.uniform01() - 0.5;
            p.lower[static_cast<size_t>(j)] = 0.0;
            p.upper[static_cast<size_t>(j)] = 2.0;
        }
        Matrix A(3, n);
        std::vector<double> b(3);
        for (int r = 0; r < 3; ++r) {
            for (int j = 0; j < n; ++j) A.at(r, j) = rng.uniform01() - 0.5;
            b[static_cast<size_t>(r)] = rng.uniform01();
        }
        p.A = A;
        p.b = b;
        LpSolution s1 = solve(p);
        LpSolution s2 = solve(p);
        CHECK(s1.status == s2.status);
        if (s1.status == LpStatus::Optimal) {
            CHECK(std::memcmp(&s1.objective_value, &s2.objective_value, sizeof(double)) == 0);
            CHECK(s1.point == s2.point);
        }
    }
}

TEST_CASE("free variables and equality encoding") {
    // minimize x + y with x + y >= 1 encoded as -(x+y) <= -1, x free, y in [0, 10]
    LinearProgram p = LinearProgram::with_vars(2);
    p.objective = {1.0, 1.0};
    p.lower = {-kInf, 0.0};
    p.upper = {kInf, 10.0};
    p.add_row({-1.0, -1.0}, -1.0);
    LpSolution s = solve(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(1.0));
}
