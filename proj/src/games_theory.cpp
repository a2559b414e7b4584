#include "magic/games_theory.hpp"

#include <cmath>

namespace magic::theory {

std::map<PlayerId, double> pd_payoffs(const std::map<PlayerId, PDChoice>& choices,
                                      const PDScoring& scoring) {
    if (choices.size() != 3)
        throw Error(Errc::WrongPlayerCount,
                    "pd_payoffs needs exactly 3 choices, got " + std::to_string(choices.size()));
    int defectors = 0;
    for (const auto& [p, c] : choices)
        if (c == PDChoice::Defect) ++defectors;

    std::map<PlayerId, double> payoffs;
    for (const auto& [p, c] : choices) {
        bool defected = c == PDChoice::Defect;
        switch (defectors) {
        case 0: payoffs[p] = scoring.cooperate; break;
        case 1: payoffs[p] = defected ? scoring.one_defect : 0.0; break;
        case 2: payoffs[p] = defected ? scoring.two_defect : 0.0; break;
        default: payoffs[p] = scoring.defect; break;
        }
    }
    return payoffs;
}

void validate_proposal(const Proposal& proposal, double total_fee, int players) {
    if (static_cast<int>(proposal.shares.size()) != players)
        throw Error(Errc::WrongPlayerCount, "proposal must cover every player");
    double sum = 0.0;
    for (const auto& [p, share] : proposal.shares) {
        if (p.index < 1 || p.index > players) throw Error(Errc::PositionOutOfRange, player_name(p));
        if (share < 0) throw Error(Errc::NegativeAmount, player_name(p) + " share");
        sum += share;
    }
    if (std::abs(sum - total_fee) > kShareTolerance)
        throw Error(Errc::InvalidField, "shares sum to " + std::to_string(sum) +
                                            ", expected " + std::to_string(total_fee));
}

std::vector<PlayerId>
cs_fairness_check(const Proposal& proposal,
                  const std::optional<std::map<PlayerId, double>>& standalone_costs) {
    std::vector<PlayerId> violations;
    if (!standalone_costs) return violations;
    for (const auto& [p, share] : proposal.shares) {
        auto it = standalone_costs->find(p);
        if (it != standalone_costs->end() && share > it->second + kShareTolerance)
            violations.push_back(p);
    }
    return violations;
}

std::optional<Proposal> cs_resolve_round(const std::vector<Proposal>& proposals,
                                         const std::map<PlayerId, PlayerId>& votes) {
    auto find_proposal = [&](PlayerId proposer) -> const Proposal* {
        for (const Proposal& p : proposals)
            if (p.proposer == proposer) return &p;
        return nullptr;
    };
    std::optional<PlayerId> agreed;
    for (const auto& [voter, proposer] : votes) {
        if (!find_proposal(proposer))
            throw Error(Errc::VoteForMissingProposal,
                        player_name(voter) + " voted for " + player_name(proposer) +
                            " who made no proposal");
        if (!agreed)
            agreed = proposer;
        else if (*agreed != proposer)
            return std::nullopt;
    }
    if (!agreed) return std::nullopt;
    return *find_proposal(*agreed);
}

PGLedger pg_settle(const std::map<PlayerId, double>& contributions, const PGLedger& ledger) {
    double pool = 0.0;
    for (const auto& [p, c] : contributions) {
        if (c < 0) throw Error(Errc::NegativeAmount, player_name(p) + " contribution");
        auto it = ledger.balances.find(p);
        if (it == ledger.balances.end()) throw Error(Errc::UnknownTarget, player_name(p));
        if (c > it->second) throw Error(Errc::Overdraft, player_name(p));
        pool += c;
    }
    PGLedger next = ledger;
    const double payback = ledger.multiplier * pool / static_cast<double>(ledger.balances.size());
    for (auto& [p, balance] : next.balances) {
        auto it = contributions.find(p);
        double c = it == contributions.end() ? 0.0 : it->second;
        balance = balance - c + payback;
    }
    next.contributions_history.push_back(contributions);
    return next;
}

std::set<PlayerId> theory_winners(const std::map<PlayerId, double>& final_scores) {
    std::set<PlayerId> winners;
    if (final_scores.empty()) return winners;
    double best = final_scores.begin()->second;
    for (const auto& [p, score] : final_scores) best = std::max(best, score);
    for (const auto& [p, score] : final_scores)
        if (score == best) winners.insert(p);
    return winners;
}

} // namespace magic::theory
