#include <atomic>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rdcert/kf_search.hpp"

using namespace rdcert;

namespace {

Table1Cell cell(Theorem th, std::size_t n, double kf) {
    Table1Cell c;
    c.theorem = th;
    c.N = n;
    c.kf_star = kf;
    return c;
}

}  // namespace

TEST(MaxKf, DistributedTwoModesIsMonotoneAndCertified) {
    const auto in = fixtures::example_cell(Actuation::Distributed, 2);
    const SearchSpec spec;
    const KfResult r = max_kf(in.mats, in.plant, in.gains, spec);
    ASSERT_TRUE(r.feasible_at_zero) << r.diagnostic;
    ASSERT_TRUE(r.certificate);
    EXPECT_TRUE(r.monotone) << r.diagnostic;
    EXPECT_GT(r.kf_star, 1.5);
    EXPECT_LT(r.kf_star, 2.5);
    // bracket: the witness verifies at k_f*, and every probe above k_f* + tol failed
    const LmiProblem at = build_problem(in.mats, in.plant, in.gains, r.certificate->gamma, r.kf_star);
    EXPECT_TRUE(verify_certificate(*r.certificate, at).pass);
    for (const auto& p : r.log) {
        if (p.kf > r.kf_star) EXPECT_NE(p.verdict, SolveStatus::Feasible) << "k_f = " << p.kf;
    }
    bool closed = false;
    for (const auto& p : r.log) closed |= p.kf > r.kf_star && p.kf <= r.kf_star + spec.tolerance + 1e-12;
    EXPECT_TRUE(closed);
}

TEST(MaxKf, SearchIsDeterministic) {
    const auto in = fixtures::example_cell(Actuation::Boundary, 2);
    SearchSpec spec;
    spec.tolerance = 0.05;
    const KfResult a = max_kf(in.mats, in.plant, in.gains, spec);
    const KfResult b = max_kf(in.mats, in.plant, in.gains, spec);
    EXPECT_EQ(a.kf_star, b.kf_star);
    ASSERT_EQ(a.log.size(), b.log.size());
    ASSERT_TRUE(a.certificate && b.certificate);
    EXPECT_EQ(a.certificate->P, b.certificate->P);
}

TEST(MaxKf, FarAboveTheTableEveryCellIsInfeasible) {
    const SearchSpec spec;
    for (const Actuation a : {Actuation::Distributed, Actuation::Boundary}) {
        for (std::size_t n = 2; n <= 6; ++n) {
            const auto in = fixtures::example_cell(a, n);
            const ProbeOutcome p = probe_kf(in.mats, in.plant, in.gains, 10.0, spec, spec.gamma_grid.size() / 2);
            EXPECT_EQ(p.verdict, SolveStatus::Infeasible) << to_string(a) << " N = " << n;
            EXPECT_FALSE(p.certificate);
        }
    }
}

TEST(MaxKf, RejectsNonpositiveTolerance) {
    const auto in = fixtures::example_cell(Actuation::Distributed, 2);
    SearchSpec spec;
    spec.tolerance = 0.0;
    EXPECT_THROW(max_kf(in.mats, in.plant, in.gains, spec), ConfigurationError);
    spec = SearchSpec{};
    spec.gamma_grid.clear();
    EXPECT_THROW(probe_kf(in.mats, in.plant, in.gains, 1.0, spec, 0), ConfigurationError);
}

TEST(Table1, TrendPredicates) {
    Table1Result t;
    t.cells = {cell(Theorem::Two, 2, 2.0), cell(Theorem::Two, 3, 2.3), cell(Theorem::Three, 2, 1.9),
               cell(Theorem::Three, 3, 2.1)};
    EXPECT_TRUE(row_increasing(t, Theorem::Two, 0.0));
    EXPECT_TRUE(row_increasing(t, Theorem::Three, 0.0));
    EXPECT_TRUE(columns_dominate(t, 0.0));
    t.cells[3].kf_star = 2.4;
    EXPECT_FALSE(columns_dominate(t, 0.0));
    EXPECT_TRUE(columns_dominate(t, 0.1));
    t.cells[1].kf_star = 1.95;
    EXPECT_FALSE(row_increasing(t, Theorem::Two, 0.0));
    EXPECT_TRUE(row_increasing(t, Theorem::Two, 0.05));
    ASSERT_NE(t.find(Theorem::Three, 3), nullptr);
    EXPECT_EQ(t.find(Theorem::Three, 7), nullptr);
}

TEST(Table1, BuilderErrorsAreRecordedPerCell) {
    Table1Spec spec;
    spec.Ns = {2};
    spec.theorems = {Theorem::Two};
    spec.deltas = {0.25};
    const CellBuilder failing = [](Theorem, std::size_t, double) -> CellInput {
        throw ConfigurationError("no plant");
    };
    const Table1Result r = table1(failing, spec);
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_EQ(r.cells[0].kf_star, 0.0);
    EXPECT_NE(r.cells[0].error.find("no plant"), std::string::npos);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(5, 3, [](std::size_t i) { if (i == 3) throw RangeError("x"); }), RangeError);
}
