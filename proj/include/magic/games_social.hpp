#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "magic/core.hpp"

namespace magic::social {

// Outcome codes, Chameleon: 0 non-chameleon won, 1 chameleon won,
// 2 even voting, 3 chameleon guessed right.
// Undercover: 0 undercover won, 1 civilian won, 2 even voting.

struct ChameleonTruth {
    PlayerId chameleon;
    std::string secret_word;
};

// Case-insensitive, whitespace-trimmed exact match.
bool secret_word_matches(const std::string& guess, const std::string& secret);

// Resolves the accusation vote plus optional guess into an outcome code.
// Throws MissingGuess when the plurality lands on the chameleon but no
// guess was supplied.
int resolve_chameleon(const std::map<PlayerId, PlayerId>& votes,
                      const std::optional<std::string>& guess, const ChameleonTruth& truth);

int resolve_undercover(const std::map<PlayerId, PlayerId>& votes, PlayerId undercover);

// Credit vectors indexed by outcome code.
inline constexpr std::array<int, 4> kChameleonCredits = {0, 1, 2, 1};
inline constexpr std::array<int, 4> kNonChameleonCredits = {2, 1, 0, 1};
inline constexpr std::array<int, 3> kUndercoverCredits = {3, 0, 2};
inline constexpr std::array<int, 3> kCivilianCredits = {0, 3, 1};

// Credit table entry for one game. Throws CodeOutOfRange for codes outside
// the scenario's range and InvalidField for roles foreign to the scenario.
int role_credit(Scenario scenario, RoleKind role, int code);

// ── Stage-machine state ──────────────────────────────────────────────

enum class ChameleonStage { Clue, Accusation, Guess, Done };

struct ChameleonState {
    ChameleonStage stage = ChameleonStage::Clue;
    std::map<PlayerId, std::string> clues;
    std::map<PlayerId, PlayerId> votes;
    std::optional<std::string> guess;
    PlayerId chameleon;
    std::string secret_word;
    int players = 3;

    void add_clue(PlayerId who, std::string clue);
    void add_vote(PlayerId who, PlayerId target);
    // Closes the accusation stage: moves to Guess only when the plurality
    // singles out the chameleon, otherwise straight to Done.
    void close_accusation();
    void add_guess(std::string word);
    int resolve() const;
};

struct UndercoverState {
    int round = 1;
    std::vector<std::tuple<int, PlayerId, std::string>> clues;
    std::map<PlayerId, bool> self_probes; // claimed "I am the undercover"
    std::map<PlayerId, PlayerId> votes;
    PlayerId undercover;
    std::string civilian_word;
    std::string undercover_word;
    int players = 3;
    int rounds = 2;

    void add_clue(PlayerId who, std::string clue);
    void add_probe(PlayerId who, bool claims_undercover);
    void add_vote(PlayerId who, PlayerId target);
    int resolve() const;
};

} // namespace magic::social
