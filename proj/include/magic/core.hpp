#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "magic/error.hpp"

namespace magic {

using json = nlohmann::json;

// ── Players and roles ────────────────────────────────────────────────

struct PlayerId {
    int index = 0; // 1..N

    auto operator<=>(const PlayerId&) const = default;
};

inline std::string player_name(PlayerId p) { return "Player " + std::to_string(p.index); }

enum class Scenario {
    Chameleon,
    Undercover,
    CostSharing,
    PrisonersDilemma,
    PublicGood,
};

enum class RoleKind {
    Chameleon,
    NonChameleon,
    Undercover,
    Civilian,
    CostSharer,
    Prisoner,
    Contributor,
};

const char* scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);
const char* role_name(RoleKind r);
RoleKind role_from_name(const std::string& name);

// Shortest decimal form that parses back exactly; integral values drop the
// trailing ".0". Used wherever numbers are embedded in prompt/reply text.
std::string format_number(double x);

// Scenario a role belongs to; the three theory roles are each bound to
// exactly one scenario.
Scenario role_scenario(RoleKind r);

// ── Topic settings ───────────────────────────────────────────────────

struct ChameleonTopic {
    std::string topic;
    std::string secret_word;
    PlayerId chameleon_position;

    bool operator==(const ChameleonTopic&) const = default;
};

struct UndercoverTopic {
    std::string civilian_word;
    std::string undercover_word;
    PlayerId undercover_position;

    bool operator==(const UndercoverTopic&) const = default;
};

struct CostSharingTopic {
    double total_fee = 0.0;
    std::vector<std::string> usage_descriptions; // exactly N entries
    std::optional<std::vector<double>> standalone_costs;

    bool operator==(const CostSharingTopic&) const = default;
};

// Per-round payoffs for the three-player dilemma. The recommended
// ordering one_defect > cooperate > defect >= 0 is warned about, not
// enforced.
struct PDScoring {
    double cooperate = 0.0;
    double defect = 0.0;
    double one_defect = 0.0;
    double two_defect = 0.0;

    bool operator==(const PDScoring&) const = default;
};

struct PublicGoodTopic {
    double multiplier = 0.0;
    double initial_balance = 100.0;

    bool operator==(const PublicGoodTopic&) const = default;
};

using TopicPayload =
    std::variant<ChameleonTopic, UndercoverTopic, CostSharingTopic, PDScoring, PublicGoodTopic>;

// One competition's full configuration. `rounds` may be left unset in
// fixture files; validation fills the per-scenario default.
struct TopicSetting {
    std::string id;
    Scenario scenario = Scenario::Chameleon;
    PlayerId challenger_position{1};
    int players = 3;
    std::optional<int> rounds;
    TopicPayload payload;

    bool operator==(const TopicSetting&) const = default;
};

int default_rounds(Scenario s);

// A TopicSetting that passed validate_topic_setting. Constructed only by
// validation; `rounds` is always set.
class ValidatedSetting {
public:
    const TopicSetting& get() const { return setting_; }
    int rounds() const { return *setting_.rounds; }
    int players() const { return setting_.players; }
    PlayerId challenger() const { return setting_.challenger_position; }
    Scenario scenario() const { return setting_.scenario; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    // The challenger's role under this setting.
    RoleKind challenger_role() const;
    // The hidden player (chameleon/undercover); nullopt for theory games.
    std::optional<PlayerId> hidden_player() const;

    bool operator==(const ValidatedSetting& other) const { return setting_ == other.setting_; }

private:
    friend ValidatedSetting validate_topic_setting(const TopicSetting& setting);
    ValidatedSetting(TopicSetting s, std::vector<std::string> w)
        : setting_(std::move(s)), warnings_(std::move(w)) {}

    TopicSetting setting_;
    std::vector<std::string> warnings_;
};

// Normalizes (rounds defaulted per scenario) and checks positions, payload
// completeness and numeric invariants. Throws Error with MissingField,
// PositionOutOfRange, NonPositiveMultiplier or WrongDescriptionCount.
// Idempotent: validating a validated setting yields an equal value.
ValidatedSetting validate_topic_setting(const TopicSetting& setting);

// ── Actions ──────────────────────────────────────────────────────────

struct ClueAction {
    std::string text;
    bool operator==(const ClueAction&) const = default;
};
struct VoteAction {
    PlayerId target;
    bool operator==(const VoteAction&) const = default;
};
struct GuessAction {
    std::string word;
    bool operator==(const GuessAction&) const = default;
};
struct ChoiceAction {
    bool cooperate = true;
    bool operator==(const ChoiceAction&) const = default;
};
struct ContributionAction {
    double amount = 0.0;
    bool operator==(const ContributionAction&) const = default;
};
struct ProposalAction {
    std::map<PlayerId, double> shares;
    bool operator==(const ProposalAction&) const = default;
};
struct ProposalVoteAction {
    PlayerId proposer;
    bool operator==(const ProposalVoteAction&) const = default;
};
struct RoleClaimAction {
    bool is_special = false; // claims to be the undercover/chameleon
    bool operator==(const RoleClaimAction&) const = default;
};

using Action = std::variant<ClueAction, VoteAction, GuessAction, ChoiceAction, ContributionAction,
                            ProposalAction, ProposalVoteAction, RoleClaimAction>;

// ── Transcript events ────────────────────────────────────────────────

enum class StageKind {
    Clue,
    Accusation,
    Guess,
    Proposal,
    Vote,
    Choice,
    Contribution,
    PgmAnalysis,
    RoleProbe,
    ModeratorNote,
};

const char* stage_name(StageKind s);
StageKind stage_from_name(const std::string& name);

struct Visibility {
    enum Kind { Public, Private, ModeratorOnly };

    Kind kind = Public;
    std::vector<PlayerId> audience; // Private only, sorted

    static Visibility pub() { return {Public, {}}; }
    static Visibility priv(std::vector<PlayerId> who);
    static Visibility moderator() { return {ModeratorOnly, {}}; }

    bool visible_to(PlayerId viewer) const;
    bool operator==(const Visibility&) const = default;
};

struct GameEvent {
    std::string game_id;
    int turn = 0; // logical round/stage index
    int seq = 0;  // strictly increasing within a game
    StageKind stage = StageKind::ModeratorNote;
    std::optional<PlayerId> actor; // nullopt = moderator
    Visibility visibility;
    std::string raw_text;
    std::optional<Action> parsed_action;

    bool operator==(const GameEvent&) const = default;
};

// ── Outcomes ─────────────────────────────────────────────────────────

// Outcome codes: Chameleon 0..3, Undercover 0..2, CostSharing 0 (failed)
// or 1 (consensus), PD/PG always 0 with the winner set carrying the
// result. Aborted games carry aborted=true and are excluded from metrics.
struct Outcome {
    Scenario scenario = Scenario::Chameleon;
    int code = 0;
    std::set<PlayerId> winners;
    std::map<PlayerId, double> per_player_scores;
    std::optional<PlayerId> agreed_proposer; // cost sharing consensus only
    bool aborted = false;
    std::string abort_reason;

    bool operator==(const Outcome&) const = default;
};

// Append-only event log; the single source of truth for metrics.
class Transcript {
public:
    Transcript() = default;
    Transcript(std::string game_id, ValidatedSetting setting)
        : game_id_(std::move(game_id)), setting_(std::move(setting)) {}

    const std::string& game_id() const { return game_id_; }
    const ValidatedSetting& setting() const { return *setting_; }
    const std::vector<GameEvent>& events() const { return events_; }
    const std::optional<Outcome>& outcome() const { return outcome_; }

    // Enforces strictly increasing (turn, seq) order.
    void append(GameEvent event);
    // May be called exactly once, after the terminal event.
    void set_outcome(Outcome outcome);

private:
    std::string game_id_;
    std::optional<ValidatedSetting> setting_;
    std::vector<GameEvent> events_;
    std::optional<Outcome> outcome_;
};

// Exactly the events visible to `viewer`, order preserved. Throws
// UnknownViewer if the viewer is not a participant.
std::vector<GameEvent> view_for(const Transcript& transcript, PlayerId viewer);

// ── JSON (de)serialization ───────────────────────────────────────────

void to_json(json& j, const PlayerId& p);
void from_json(const json& j, PlayerId& p);
void to_json(json& j, const Action& a);
void from_json(const json& j, Action& a);
void to_json(json& j, const Visibility& v);
void from_json(const json& j, Visibility& v);
void to_json(json& j, const GameEvent& e);
void from_json(const json& j, GameEvent& e);
void to_json(json& j, const TopicSetting& s);
void from_json(const json& j, TopicSetting& s);
void to_json(json& j, const Outcome& o);
void from_json(const json& j, Outcome& o);

// Topic-setting fixture files: one document per scenario, schema
// "magic-topic/1", field `settings` holding the array.
inline constexpr const char* kTopicSchema = "magic-topic/1";

std::vector<TopicSetting> parse_topic_document(const json& doc);
std::vector<TopicSetting> load_topic_file(const std::string& path);

} // namespace magic
