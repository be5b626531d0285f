#include <doctest.h>

#include <cmath>

#include "herdsim/core.hpp"
#include "herdsim/rng.hpp"

using namespace herdsim;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (auto& row : rows) {
        int c = 0;
        for (double v : row) m.at(r, c++) = v;
        ++r;
    }
    return m;
}

Belief random_belief(Rng& rng, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    double s = 0.0;
    for (double& x : v) {
        x = rng.uniform01() + 1e-6;
        s += x;
    }
    for (double& x : v) x /= s;
    return validate_belief(v);
}

// independent minor enumeration for the TP2 cross-check
bool tp2_oracle(const Matrix& a) {
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.rows; ++j)
            for (int k = 0; k < a.cols; ++k)
                for (int l = 0; l < a.cols; ++l) {
                    if (i >= j || k >= l) continue;
                    double det = a.at(i, k) * a.at(j, l) - a.at(i, l) * a.at(j, k);
                    if (det < -1e-12) return false;
                }
    return true;
}

}  // namespace

TEST_CASE("validate_belief accepts, normalizes, rejects") {
    Belief b = validate_belief({0.5, 0.5});
    CHECK(b[0] == 0.5);
    Belief v = validate_belief({1.0, 0.0});
    CHECK(v[0] == 1.0);
    CHECK_THROWS_AS(validate_belief({0.3, 0.3}), NotASimplexPoint);
    CHECK_THROWS_AS(validate_belief({-0.1, 1.1}), NotASimplexPoint);
    // slightly off simplex gets renormalized exactly
    Belief r = validate_belief({0.5000001, 0.5});
    double s = 0.0;
    for (double x : r.probs()) s += x;
    CHECK(s == 1.0);
}

TEST_CASE("validate_belief is idempotent") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        Belief b = random_belief(rng, 2 + t % 4);
        Belief b2 = validate_belief(b.probs());
        for (int i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(b2[i]).epsilon(1e-15));
    }
}

TEST_CASE("is_tp2 examples") {
    CHECK(is_tp2(ObservationModel(mat({{0.8, 0.2}, {0.2, 0.8}}))));
    CHECK_FALSE(is_tp2(ObservationModel(mat({{0.2, 0.8}, {0.8, 0.2}}))));
    CHECK(is_tp2(ObservationModel(mat({{1.0, 0.0}, {0.0, 1.0}}))));
}

TEST_CASE("is_tp2 agrees with brute-force minors up to 6x6") {
    Rng rng(11);
    for (int t = 0; t < 300; ++t) {
        int X = 2 + rng.uniform_int(5);
        int Y = 2 + rng.uniform_int(5);
        Matrix m(X, Y);
        for (int x = 0; x < X; ++x) {
            double s = 0.0;
            for (int y = 0; y < Y; ++y) {
                // mix of smooth rows and sparse rows so both verdicts appear
                double v = rng.uniform01();
                if (rng.uniform01() < 0.2) v = 0.0;
                m.at(x, y) = v;
                s += v;
            }
            if (s == 0.0) {
                m.at(x, 0) = 1.0;
                s = 1.0;
            }
            for (int y = 0; y < Y; ++y) m.at(x, y) /= s;
        }
        ObservationModel om(m);
        CHECK(is_tp2(om) == tp2_oracle(m));
    }
}

TEST_CASE("mlr examples") {
    CHECK(mlr_dominates(validate_belief({0.2, 0.8}), validate_belief({0.5, 0.5})));
    Belief u = validate_belief({0.5, 0.5});
    CHECK(mlr_dominates(u, u));
    CHECK_FALSE(mlr_dominates(validate_belief({0.5, 0.5}), validate_belief({0.2, 0.8})));
}

TEST_CASE("fosd examples") {
    CHECK(fosd_dominates(validate_belief({0.2, 0.8}), validate_belief({0.5, 0.5})));
    Belief b = validate_belief({0.3, 0.3, 0.4});
    CHECK(fosd_dominates(b, b));
    CHECK_FALSE(fosd_dominates(validate_belief({0.6, 0.4}), validate_belief({0.5, 0.5})));
    CHECK_THROWS_AS(fosd_dominates(validate_belief({0.5, 0.5}), validate_belief({0.3, 0.3, 0.4})),
                    DimensionMismatch);
}

TEST_CASE("MLR implies FOSD on random pairs") {
    Rng rng(13);
    int mlr_hits = 0;
    for (int t = 0; t < 1000; ++t) {
        int n = 2 + t % 3;
        Belief a = random_belief(rng, n);
        Belief b = random_belief(rng, n);
        if (mlr_dominates(a, b)) {
            ++mlr_hits;
            CHECK(fosd_dominates(a, b));
        }
    }
    CHECK(mlr_hits > 50);  // the implication must actually get exercised
}

TEST_CASE("order predicates are transitive on sampled triples") {
    Rng rng(17);
    int chains = 0;
    for (int t = 0; t < 3000; ++t) {
        Belief a = random_belief(rng, 2);
        Belief b = random_belief(rng, 2);
        Belief c = random_belief(rng, 2);
        if (mlr_dominates(a, b) && mlr_dominates(b, c)) {
            ++chains;
            CHECK(mlr_dominates(a, c));
        }
        if (fosd_dominates(a, b) && fosd_dominates(b, c)) CHECK(fosd_dominates(a, c));
    }
    CHECK(chains > 100);
}

TEST_CASE("structural assumptions: constant costs pass, 0-1 costs fail S1") {
    ObservationModel m(mat({{0.7, 0.3}, {0.3, 0.7}}));
    StructuralReport all_zero = check_structural_assumptions(CostSpec(Matrix(2, 2, 0.0)), m, 0.99);
    CHECK(all_zero.all());

    StructuralReport r01 = check_structural_assumptions(CostSpec::zero_one(2), m, 0.99);
    CHECK(r01.s4.ok);
    CHECK_FALSE(r01.s1.ok);

    ObservationModel flipped(mat({{0.2, 0.8}, {0.8, 0.2}}));
    StructuralReport non_tp2 = check_structural_assumptions(CostSpec(Matrix(2, 2, 0.0)), flipped, 0.99);
    CHECK_FALSE(non_tp2.s4.ok);
    CHECK(non_tp2.s1.ok);
}

TEST_CASE("structural assumptions: per-action constant costs pass S1-S3") {
    Matrix c(2, 2);
    c.at(0, 0) = c.at(1, 0) = 0.3;
    c.at(0, 1) = c.at(1, 1) = 0.9;
    StructuralReport rep =
        check_structural_assumptions(CostSpec(c), ObservationModel(mat({{0.8, 0.2}, {0.3, 0.7}})), 0.9);
    CHECK(rep.all());
}

TEST_CASE("matrix csv round trip") {
    Matrix m = mat({{0.25, 0.75}, {1.0 / 3.0, 2.0 / 3.0}});
    std::string path = "core_roundtrip.csv";
    save_matrix_csv(path, m);
    Matrix r = load_matrix_csv(path);
    REQUIRE(r.rows == 2);
    REQUIRE(r.cols == 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(r.at(i, j) == doctest::Approx(m.at(i, j)).epsilon(1e-12));
}
