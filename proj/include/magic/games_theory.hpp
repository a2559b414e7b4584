#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "magic/core.hpp"

namespace magic::theory {

enum class PDChoice { Cooperate, Defect };

// Per-round payoffs for the three-player dilemma:
// all C -> cooperate each; all D -> defect each; one D -> the defector
// gets one_defect and the cooperators 0; two D -> the defectors get
// two_defect each and the cooperator 0.
std::map<PlayerId, double> pd_payoffs(const std::map<PlayerId, PDChoice>& choices,
                                      const PDScoring& scoring);

struct Proposal {
    PlayerId proposer;
    std::map<PlayerId, double> shares;

    bool operator==(const Proposal&) const = default;
};

inline constexpr double kShareTolerance = 0.01;

// Shares must be nonnegative and sum to total_fee within kShareTolerance.
void validate_proposal(const Proposal& proposal, double total_fee, int players);

// Individual-rationality check: players whose share exceeds their
// standalone cost. Disabled (empty result) when costs are absent.
std::vector<PlayerId>
cs_fairness_check(const Proposal& proposal,
                  const std::optional<std::map<PlayerId, double>>& standalone_costs);

// The proposal all votes name, if unanimous. Votes name proposers.
std::optional<Proposal> cs_resolve_round(const std::vector<Proposal>& proposals,
                                         const std::map<PlayerId, PlayerId>& votes);

struct PGLedger {
    std::map<PlayerId, double> balances;
    std::vector<std::map<PlayerId, double>> contributions_history;
    double multiplier = 1.0;

    bool operator==(const PGLedger&) const = default;
};

// One settlement round: each balance loses its contribution and receives
// an even split of the multiplied pool. Conservation:
// sum(new) - sum(old) = (multiplier - 1) * sum(contributions).
PGLedger pg_settle(const std::map<PlayerId, double>& contributions, const PGLedger& ledger);

// Argmax set; a tied challenger counts as winning.
std::set<PlayerId> theory_winners(const std::map<PlayerId, double>& final_scores);

} // namespace magic::theory
