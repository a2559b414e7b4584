#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "magic/games_theory.hpp"

using namespace magic;
using theory::PDChoice;

namespace {

std::map<PlayerId, PDChoice> profile(bool d1, bool d2, bool d3) {
    auto c = [](bool d) { return d ? PDChoice::Defect : PDChoice::Cooperate; };
    return {{PlayerId{1}, c(d1)}, {PlayerId{2}, c(d2)}, {PlayerId{3}, c(d3)}};
}

// Hand-written payoff table: one row per choice profile (1 = defect),
// written out literally rather than computed.
struct PayoffRow {
    std::array<int, 3> defects;
    std::array<double, 3> payoffs;
};

std::vector<PayoffRow> hand_table(const PDScoring& s) {
    return {
        {{0, 0, 0}, {s.cooperate, s.cooperate, s.cooperate}},
        {{1, 0, 0}, {s.one_defect, 0, 0}},
        {{0, 1, 0}, {0, s.one_defect, 0}},
        {{0, 0, 1}, {0, 0, s.one_defect}},
        {{1, 1, 0}, {s.two_defect, s.two_defect, 0}},
        {{1, 0, 1}, {s.two_defect, 0, s.two_defect}},
        {{0, 1, 1}, {0, s.two_defect, s.two_defect}},
        {{1, 1, 1}, {s.defect, s.defect, s.defect}},
    };
}

} // namespace

TEST_CASE("pd_payoffs examples") {
    PDScoring s{3, 1, 5, 2};
    auto one = theory::pd_payoffs(profile(true, false, false), s);
    CHECK(one.at(PlayerId{1}) == 5);
    CHECK(one.at(PlayerId{2}) == 0);
    CHECK(one.at(PlayerId{3}) == 0);

    auto all_c = theory::pd_payoffs(profile(false, false, false), s);
    for (int k = 1; k <= 3; ++k) CHECK(all_c.at(PlayerId{k}) == 3);

    auto two = theory::pd_payoffs(profile(true, true, false), s);
    CHECK(two.at(PlayerId{1}) == 2);
    CHECK(two.at(PlayerId{2}) == 2);
    CHECK(two.at(PlayerId{3}) == 0);

    CHECK_THROWS_AS((void)theory::pd_payoffs({{PlayerId{1}, PDChoice::Defect}}, s), Error);
}

TEST_CASE("pd_payoffs matches the hand table for all profiles and three scorings") {
    for (const PDScoring& s : {PDScoring{3, 1, 5, 2}, PDScoring{4, 2, 7, 3}, PDScoring{2, 0, 9, 1}}) {
        for (const PayoffRow& row : hand_table(s)) {
            auto payoffs = theory::pd_payoffs(profile(row.defects[0], row.defects[1],
                                                      row.defects[2]),
                                              s);
            for (int k = 1; k <= 3; ++k)
                CHECK(payoffs.at(PlayerId{k}) == row.payoffs[static_cast<size_t>(k - 1)]);
        }
    }
}

TEST_CASE("pd_payoffs is symmetric under player permutation") {
    PDScoring s{3, 1, 5, 2};
    std::array<int, 3> perm{2, 3, 1};
    for (int mask = 0; mask < 8; ++mask) {
        auto base = profile(mask & 1, mask & 2, mask & 4);
        std::map<PlayerId, PDChoice> permuted;
        for (const auto& [p, c] : base) permuted[PlayerId{perm[static_cast<size_t>(p.index - 1)]}] = c;
        auto base_pay = theory::pd_payoffs(base, s);
        auto perm_pay = theory::pd_payoffs(permuted, s);
        for (const auto& [p, x] : base_pay)
            CHECK(perm_pay.at(PlayerId{perm[static_cast<size_t>(p.index - 1)]}) == x);
    }
}

TEST_CASE("unilateral defection from all-cooperate raises the deviator's payoff") {
    // Nash-pressure property under the recommended ordering.
    for (const PDScoring& s : {PDScoring{3, 1, 5, 2}, PDScoring{4, 1, 6, 2}, PDScoring{2, 1, 4, 1}}) {
        double stay = theory::pd_payoffs(profile(false, false, false), s).at(PlayerId{1});
        double deviate = theory::pd_payoffs(profile(true, false, false), s).at(PlayerId{1});
        CHECK(deviate > stay);
    }
}

TEST_CASE("pg_settle examples") {
    theory::PGLedger ledger;
    ledger.multiplier = 2.0;
    for (int k = 1; k <= 3; ++k) ledger.balances[PlayerId{k}] = 100.0;

    auto next = theory::pg_settle(
        {{PlayerId{1}, 10.0}, {PlayerId{2}, 20.0}, {PlayerId{3}, 30.0}}, ledger);
    CHECK(next.balances.at(PlayerId{1}) == doctest::Approx(130.0));
    CHECK(next.balances.at(PlayerId{2}) == doctest::Approx(120.0));
    CHECK(next.balances.at(PlayerId{3}) == doctest::Approx(110.0));
    CHECK(next.contributions_history.size() == 1);

    auto unchanged = theory::pg_settle(
        {{PlayerId{1}, 0.0}, {PlayerId{2}, 0.0}, {PlayerId{3}, 0.0}}, ledger);
    CHECK(unchanged.balances == ledger.balances);

    CHECK_THROWS_AS((void)theory::pg_settle({{PlayerId{1}, 120.0}}, ledger), Error);
}

TEST_CASE("pg_settle conserves total up to the multiplier") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> balance_dist(1.0, 200.0);
    std::uniform_real_distribution<double> mult_dist(0.5, 3.0);
    for (int iteration = 0; iteration < 2000; ++iteration) {
        theory::PGLedger ledger;
        ledger.multiplier = mult_dist(rng);
        double old_total = 0.0;
        std::map<PlayerId, double> contributions;
        for (int k = 1; k <= 3; ++k) {
            double b = balance_dist(rng);
            ledger.balances[PlayerId{k}] = b;
            old_total += b;
            contributions[PlayerId{k}] = std::uniform_real_distribution<double>(0.0, b)(rng);
        }
        double pool = 0.0;
        for (const auto& [p, c] : contributions) pool += c;
        auto next = theory::pg_settle(contributions, ledger);
        double new_total = 0.0;
        for (const auto& [p, b] : next.balances) new_total += b;
        CHECK(std::abs(new_total - old_total - (ledger.multiplier - 1.0) * pool) < 1e-9);
    }
}

TEST_CASE("per-round settling equals one settlement over summed contributions") {
    // With a constant multiplier the chained per-round rule reduces to a
    // single end-of-game settlement; both paths must agree.
    std::mt19937 rng(11);
    for (int iteration = 0; iteration < 200; ++iteration) {
        double multiplier = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
        theory::PGLedger chained;
        chained.multiplier = multiplier;
        for (int k = 1; k <= 3; ++k) chained.balances[PlayerId{k}] = 100.0;

        std::map<PlayerId, double> summed;
        double pool = 0.0;
        int rounds = 1 + static_cast<int>(rng() % 5);
        for (int r = 0; r < rounds; ++r) {
            std::map<PlayerId, double> contributions;
            for (int k = 1; k <= 3; ++k) {
                // stay within the per-game budget so both paths accept
                double left = 100.0 - summed[PlayerId{k}];
                double c = std::uniform_real_distribution<double>(0.0, left / (rounds - r))(rng);
                contributions[PlayerId{k}] = c;
                summed[PlayerId{k}] += c;
                pool += c;
            }
            chained = theory::pg_settle(contributions, chained);
        }
        for (int k = 1; k <= 3; ++k) {
            double one_shot = 100.0 - summed[PlayerId{k}] + multiplier * pool / 3.0;
            CHECK(chained.balances.at(PlayerId{k}) == doctest::Approx(one_shot).epsilon(1e-9));
        }
        CHECK(chained.contributions_history.size() == static_cast<size_t>(rounds));
    }
}

TEST_CASE("cs_resolve_round returns the unanimous proposal or nothing") {
    std::vector<theory::Proposal> proposals;
    for (int k = 1; k <= 3; ++k)
        proposals.push_back({PlayerId{k},
                             {{PlayerId{1}, 300.0}, {PlayerId{2}, 300.0}, {PlayerId{3}, 300.0}}});

    auto agreed = theory::cs_resolve_round(
        proposals, {{PlayerId{1}, PlayerId{2}}, {PlayerId{2}, PlayerId{2}},
                    {PlayerId{3}, PlayerId{2}}});
    REQUIRE(agreed.has_value());
    CHECK(agreed->proposer == PlayerId{2});

    CHECK(!theory::cs_resolve_round(proposals,
                                    {{PlayerId{1}, PlayerId{1}}, {PlayerId{2}, PlayerId{2}},
                                     {PlayerId{3}, PlayerId{2}}})
               .has_value());

    CHECK_THROWS_AS((void)theory::cs_resolve_round(
                        {proposals[0]}, {{PlayerId{1}, PlayerId{3}}}),
                    Error);
}

TEST_CASE("proposal validation enforces the share sum within tolerance") {
    theory::Proposal p{PlayerId{1},
                       {{PlayerId{1}, 300.0}, {PlayerId{2}, 300.0}, {PlayerId{3}, 300.005}}};
    CHECK_NOTHROW(theory::validate_proposal(p, 900.0, 3));
    p.shares[PlayerId{3}] = 300.02;
    CHECK_THROWS_AS(theory::validate_proposal(p, 900.0, 3), Error);
    p.shares[PlayerId{3}] = -1.0;
    CHECK_THROWS_AS(theory::validate_proposal(p, 599.0, 3), Error);
}

TEST_CASE("cs_fairness_check flags shares above standalone cost") {
    theory::Proposal p{PlayerId{1},
                       {{PlayerId{1}, 50.0}, {PlayerId{2}, 30.0}, {PlayerId{3}, 20.0}}};
    std::map<PlayerId, double> standalone{
        {PlayerId{1}, 45.0}, {PlayerId{2}, 40.0}, {PlayerId{3}, 40.0}};
    auto violations = theory::cs_fairness_check(p, standalone);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0] == PlayerId{1});

    CHECK(theory::cs_fairness_check(p, std::nullopt).empty()); // disabled

    theory::Proposal fine{PlayerId{2},
                          {{PlayerId{1}, 30.0}, {PlayerId{2}, 30.0}, {PlayerId{3}, 40.0}}};
    CHECK(theory::cs_fairness_check(fine, standalone).empty());
}

TEST_CASE("theory_winners returns the argmax set with ties") {
    CHECK(theory::theory_winners({{PlayerId{1}, 25.0}, {PlayerId{2}, 0.0}, {PlayerId{3}, 0.0}}) ==
          std::set<PlayerId>{PlayerId{1}});
    CHECK(theory::theory_winners({{PlayerId{1}, 10.0}, {PlayerId{2}, 10.0}, {PlayerId{3}, 10.0}}) ==
          std::set<PlayerId>{PlayerId{1}, PlayerId{2}, PlayerId{3}});
    CHECK(theory::theory_winners({{PlayerId{1}, 9.95}, {PlayerId{2}, 10.0}, {PlayerId{3}, 10.0}}) ==
          std::set<PlayerId>{PlayerId{2}, PlayerId{3}});
}

TEST_CASE("five rounds of all-defect-vs-all-cooperate give the defector 5x one_defect") {
    // Oracle for the (25,0,0) winner example: per-round payoffs summed by hand.
    PDScoring s{3, 1, 5, 2};
    std::map<PlayerId, double> totals{{PlayerId{1}, 0}, {PlayerId{2}, 0}, {PlayerId{3}, 0}};
    for (int round = 0; round < 5; ++round)
        for (const auto& [p, x] : theory::pd_payoffs(profile(true, false, false), s))
            totals[p] += x;
    CHECK(totals.at(PlayerId{1}) == 25.0);
    CHECK(totals.at(PlayerId{2}) == 0.0);
    CHECK(theory::theory_winners(totals) == std::set<PlayerId>{PlayerId{1}});
}
