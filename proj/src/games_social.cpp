#include "magic/games_social.hpp"

#include <algorithm>
#include <cctype>

#include "magic/engine_votes.hpp"

namespace magic::engine {

VoteResult tally_votes(const std::map<PlayerId, PlayerId>& votes) {
    VoteResult result;
    for (const auto& [voter, target] : votes) {
        if (voter == target) throw Error(Errc::SelfVote, player_name(voter) + " voted for itself");
        if (target.index < 1) throw Error(Errc::UnknownTarget, player_name(target));
        result.tally[target] += 1;
    }
    int best = 0;
    for (const auto& [p, n] : result.tally) best = std::max(best, n);
    for (const auto& [p, n] : result.tally)
        if (n == best) result.top.insert(p);
    result.is_tie = result.top.size() > 1;
    return result;
}

} // namespace magic::engine

namespace magic::social {

namespace {

std::string normalize_word(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(begin, end - begin + 1);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

bool secret_word_matches(const std::string& guess, const std::string& secret) {
    return !normalize_word(secret).empty() && normalize_word(guess) == normalize_word(secret);
}

int resolve_chameleon(const std::map<PlayerId, PlayerId>& votes,
                      const std::optional<std::string>& guess, const ChameleonTruth& truth) {
    engine::VoteResult vote = engine::tally_votes(votes);
    if (vote.is_tie) return 2;
    if (!vote.top.contains(truth.chameleon)) return 1;
    if (!guess) throw Error(Errc::MissingGuess, "accusation hit the chameleon but no guess given");
    return secret_word_matches(*guess, truth.secret_word) ? 3 : 0;
}

int resolve_undercover(const std::map<PlayerId, PlayerId>& votes, PlayerId undercover) {
    engine::VoteResult vote = engine::tally_votes(votes);
    if (vote.is_tie) return 2;
    return vote.top.contains(undercover) ? 1 : 0;
}

int role_credit(Scenario scenario, RoleKind role, int code) {
    if (role_scenario(role) != scenario)
        throw Error(Errc::InvalidField, std::string(role_name(role)) + " does not play in " +
                                            scenario_name(scenario));
    auto at = [&](const auto& credits) {
        if (code < 0 || code >= static_cast<int>(credits.size()))
            throw Error(Errc::CodeOutOfRange, "outcome code " + std::to_string(code));
        return credits[static_cast<size_t>(code)];
    };
    switch (role) {
    case RoleKind::Chameleon: return at(kChameleonCredits);
    case RoleKind::NonChameleon: return at(kNonChameleonCredits);
    case RoleKind::Undercover: return at(kUndercoverCredits);
    case RoleKind::Civilian: return at(kCivilianCredits);
    default: throw Error(Errc::InvalidField, "credits exist only for social roles");
    }
}

// ── ChameleonState ───────────────────────────────────────────────────

void ChameleonState::add_clue(PlayerId who, std::string clue) {
    if (stage != ChameleonStage::Clue) throw Error(Errc::InvalidField, "not in clue stage");
    clues[who] = std::move(clue);
    if (static_cast<int>(clues.size()) == players) stage = ChameleonStage::Accusation;
}

void ChameleonState::add_vote(PlayerId who, PlayerId target) {
    if (stage != ChameleonStage::Accusation)
        throw Error(Errc::InvalidField, "not in accusation stage");
    if (who == target) throw Error(Errc::SelfVote, player_name(who));
    votes[who] = target;
}

void ChameleonState::close_accusation() {
    if (stage != ChameleonStage::Accusation)
        throw Error(Errc::InvalidField, "not in accusation stage");
    engine::VoteResult vote = engine::tally_votes(votes);
    stage = (!vote.is_tie && vote.top.contains(chameleon)) ? ChameleonStage::Guess
                                                           : ChameleonStage::Done;
}

void ChameleonState::add_guess(std::string word) {
    if (stage != ChameleonStage::Guess) throw Error(Errc::InvalidField, "guess stage unreachable");
    guess = std::move(word);
    stage = ChameleonStage::Done;
}

int ChameleonState::resolve() const {
    return resolve_chameleon(votes, guess, ChameleonTruth{chameleon, secret_word});
}

// ── UndercoverState ──────────────────────────────────────────────────

void UndercoverState::add_clue(PlayerId who, std::string clue) {
    for (const auto& [r, p, c] : clues)
        if (r == round && p == who)
            throw Error(Errc::InvalidField, player_name(who) + " already gave a clue this round");
    clues.emplace_back(round, who, std::move(clue));
    int given = 0;
    for (const auto& [r, p, c] : clues)
        if (r == round) ++given;
    if (given == players && round < rounds) ++round;
}

void UndercoverState::add_probe(PlayerId who, bool claims_undercover) {
    if (!votes.empty()) throw Error(Errc::InvalidField, "probes must precede the vote");
    self_probes[who] = claims_undercover;
}

void UndercoverState::add_vote(PlayerId who, PlayerId target) {
    if (who == target) throw Error(Errc::SelfVote, player_name(who));
    votes[who] = target;
}

int UndercoverState::resolve() const { return resolve_undercover(votes, undercover); }

} // namespace magic::social
