#include "magic/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace magic {

std::string format_number(double x) {
    if (x == std::floor(x) && std::abs(x) < 1e15)
        return std::to_string(static_cast<long long>(x));
    return json(x).dump();
}

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidField: return "InvalidField";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::NonPositiveMultiplier: return "NonPositiveMultiplier";
    case Errc::WrongDescriptionCount: return "WrongDescriptionCount";
    case Errc::UnknownViewer: return "UnknownViewer";
    case Errc::SelfVote: return "SelfVote";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::CodeOutOfRange: return "CodeOutOfRange";
    case Errc::MissingGuess: return "MissingGuess";
    case Errc::WrongPlayerCount: return "WrongPlayerCount";
    case Errc::Overdraft: return "Overdraft";
    case Errc::VoteForMissingProposal: return "VoteForMissingProposal";
    case Errc::Ambiguous: return "Ambiguous";
    case Errc::NoMatch: return "NoMatch";
    case Errc::NegativeAmount: return "NegativeAmount";
    case Errc::UnparseableAnalysis: return "UnparseableAnalysis";
    case Errc::AgentFailure: return "AgentFailure";
    case Errc::GatewayTimeout: return "GatewayTimeout";
    case Errc::FixtureMiss: return "FixtureMiss";
    case Errc::AuthError: return "AuthError";
    case Errc::RateLimited: return "RateLimited";
    case Errc::IncompleteTranscript: return "IncompleteTranscript";
    case Errc::EmptyOutcomeList: return "EmptyOutcomeList";
    case Errc::MissingRole: return "MissingRole";
    case Errc::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

const char* scenario_name(Scenario s) {
    switch (s) {
    case Scenario::Chameleon: return "chameleon";
    case Scenario::Undercover: return "undercover";
    case Scenario::CostSharing: return "cost_sharing";
    case Scenario::PrisonersDilemma: return "prisoners_dilemma";
    case Scenario::PublicGood: return "public_good";
    }
    return "unknown";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "chameleon") return Scenario::Chameleon;
    if (name == "undercover") return Scenario::Undercover;
    if (name == "cost_sharing") return Scenario::CostSharing;
    if (name == "prisoners_dilemma") return Scenario::PrisonersDilemma;
    if (name == "public_good") return Scenario::PublicGood;
    throw Error(Errc::InvalidField, "unknown scenario '" + name + "'");
}

const char* role_name(RoleKind r) {
    switch (r) {
    case RoleKind::Chameleon: return "chameleon";
    case RoleKind::NonChameleon: return "non_chameleon";
    case RoleKind::Undercover: return "undercover";
    case RoleKind::Civilian: return "civilian";
    case RoleKind::CostSharer: return "cost_sharer";
    case RoleKind::Prisoner: return "prisoner";
    case RoleKind::Contributor: return "contributor";
    }
    return "unknown";
}

RoleKind role_from_name(const std::string& name) {
    if (name == "chameleon") return RoleKind::Chameleon;
    if (name == "non_chameleon") return RoleKind::NonChameleon;
    if (name == "undercover") return RoleKind::Undercover;
    if (name == "civilian") return RoleKind::Civilian;
    if (name == "cost_sharer") return RoleKind::CostSharer;
    if (name == "prisoner") return RoleKind::Prisoner;
    if (name == "contributor") return RoleKind::Contributor;
    throw Error(Errc::InvalidField, "unknown role '" + name + "'");
}

Scenario role_scenario(RoleKind r) {
    switch (r) {
    case RoleKind::Chameleon:
    case RoleKind::NonChameleon: return Scenario::Chameleon;
    case RoleKind::Undercover:
    case RoleKind::Civilian: return Scenario::Undercover;
    case RoleKind::CostSharer: return Scenario::CostSharing;
    case RoleKind::Prisoner: return Scenario::PrisonersDilemma;
    case RoleKind::Contributor: return Scenario::PublicGood;
    }
    throw Error(Errc::InvalidField, "bad role");
}

int default_rounds(Scenario s) {
    switch (s) {
    case Scenario::Chameleon: return 1;
    case Scenario::Undercover: return 2;
    case Scenario::CostSharing:
    case Scenario::PrisonersDilemma:
    case Scenario::PublicGood: return 5;
    }
    return 1;
}

// ── Validation ───────────────────────────────────────────────────────

namespace {

void check_position(PlayerId p, int n, const std::string& what) {
    if (p.index < 1 || p.index > n)
        throw Error(Errc::PositionOutOfRange,
                    what + " " + std::to_string(p.index) + " not in 1.." + std::to_string(n));
}

} // namespace

RoleKind ValidatedSetting::challenger_role() const {
    const TopicSetting& s = setting_;
    switch (s.scenario) {
    case Scenario::Chameleon:
        return std::get<ChameleonTopic>(s.payload).chameleon_position == s.challenger_position
                   ? RoleKind::Chameleon
                   : RoleKind::NonChameleon;
    case Scenario::Undercover:
        return std::get<UndercoverTopic>(s.payload).undercover_position == s.challenger_position
                   ? RoleKind::Undercover
                   : RoleKind::Civilian;
    case Scenario::CostSharing: return RoleKind::CostSharer;
    case Scenario::PrisonersDilemma: return RoleKind::Prisoner;
    case Scenario::PublicGood: return RoleKind::Contributor;
    }
    throw Error(Errc::InvalidField, "bad scenario");
}

std::optional<PlayerId> ValidatedSetting::hidden_player() const {
    switch (setting_.scenario) {
    case Scenario::Chameleon: return std::get<ChameleonTopic>(setting_.payload).chameleon_position;
    case Scenario::Undercover:
        return std::get<UndercoverTopic>(setting_.payload).undercover_position;
    default: return std::nullopt;
    }
}

ValidatedSetting validate_topic_setting(const TopicSetting& setting) {
    TopicSetting s = setting;
    std::vector<std::string> warnings;

    if (s.players < 2) throw Error(Errc::InvalidField, "players must be >= 2");
    check_position(s.challenger_position, s.players, "challenger_position");
    if (!s.rounds) s.rounds = default_rounds(s.scenario);
    if (*s.rounds < 1) throw Error(Errc::InvalidField, "rounds must be >= 1");

    switch (s.scenario) {
    case Scenario::Chameleon: {
        const auto* p = std::get_if<ChameleonTopic>(&s.payload);
        if (!p) throw Error(Errc::MissingField, "chameleon payload");
        if (p->topic.empty()) throw Error(Errc::MissingField, "topic");
        if (p->secret_word.empty()) throw Error(Errc::MissingField, "secret_word");
        check_position(p->chameleon_position, s.players, "chameleon_position");
        break;
    }
    case Scenario::Undercover: {
        const auto* p = std::get_if<UndercoverTopic>(&s.payload);
        if (!p) throw Error(Errc::MissingField, "undercover payload");
        if (p->civilian_word.empty()) throw Error(Errc::MissingField, "civilian_word");
        if (p->undercover_word.empty()) throw Error(Errc::MissingField, "undercover_word");
        check_position(p->undercover_position, s.players, "undercover_position");
        break;
    }
    case Scenario::CostSharing: {
        const auto* p = std::get_if<CostSharingTopic>(&s.payload);
        if (!p) throw Error(Errc::MissingField, "cost_sharing payload");
        if (p->total_fee <= 0) throw Error(Errc::InvalidField, "total_fee must be positive");
        if (static_cast<int>(p->usage_descriptions.size()) != s.players)
            throw Error(Errc::WrongDescriptionCount,
                        "expected " + std::to_string(s.players) + " usage_descriptions, got " +
                            std::to_string(p->usage_descriptions.size()));
        if (p->standalone_costs) {
            if (static_cast<int>(p->standalone_costs->size()) != s.players)
                throw Error(Errc::WrongDescriptionCount, "standalone_costs count");
            for (double c : *p->standalone_costs)
                if (c <= 0) throw Error(Errc::InvalidField, "standalone cost must be positive");
        }
        break;
    }
    case Scenario::PrisonersDilemma: {
        const auto* p = std::get_if<PDScoring>(&s.payload);
        if (!p) throw Error(Errc::MissingField, "prisoners_dilemma payload");
        if (p->cooperate < 0 || p->defect < 0 || p->one_defect < 0 || p->two_defect < 0)
            throw Error(Errc::InvalidField, "PD scoring numbers must be >= 0");
        if (!(p->one_defect > p->cooperate && p->cooperate > p->defect))
            warnings.push_back("PD scoring does not satisfy one_defect > cooperate > defect");
        break;
    }
    case Scenario::PublicGood: {
        const auto* p = std::get_if<PublicGoodTopic>(&s.payload);
        if (!p) throw Error(Errc::MissingField, "public_good payload");
        if (p->multiplier <= 0) throw Error(Errc::NonPositiveMultiplier, "multiplier must be > 0");
        if (p->initial_balance <= 0)
            throw Error(Errc::InvalidField, "initial_balance must be > 0");
        break;
    }
    }
    return ValidatedSetting(std::move(s), std::move(warnings));
}

// ── Visibility / transcript ──────────────────────────────────────────

Visibility Visibility::priv(std::vector<PlayerId> who) {
    std::sort(who.begin(), who.end());
    who.erase(std::unique(who.begin(), who.end()), who.end());
    return {Private, std::move(who)};
}

bool Visibility::visible_to(PlayerId viewer) const {
    switch (kind) {
    case Public: return true;
    case ModeratorOnly: return false;
    case Private: return std::find(audience.begin(), audience.end(), viewer) != audience.end();
    }
    return false;
}

void Transcript::append(GameEvent event) {
    if (outcome_) throw Error(Errc::InvalidField, "transcript already closed");
    if (!events_.empty()) {
        const GameEvent& last = events_.back();
        if (std::pair(event.turn, event.seq) <= std::pair(last.turn, last.seq))
            throw Error(Errc::InvalidField, "events must have increasing (turn, seq)");
    }
    events_.push_back(std::move(event));
}

void Transcript::set_outcome(Outcome outcome) {
    if (outcome_) throw Error(Errc::InvalidField, "outcome already set");
    outcome_ = std::move(outcome);
}

std::vector<GameEvent> view_for(const Transcript& transcript, PlayerId viewer) {
    int n = transcript.setting().players();
    if (viewer.index < 1 || viewer.index > n)
        throw Error(Errc::UnknownViewer, player_name(viewer) + " is not in this game");
    std::vector<GameEvent> out;
    for (const GameEvent& e : transcript.events())
        if (e.visibility.visible_to(viewer)) out.push_back(e);
    return out;
}

// ── JSON ─────────────────────────────────────────────────────────────

void to_json(json& j, const PlayerId& p) { j = p.index; }
void from_json(const json& j, PlayerId& p) { p.index = j.get<int>(); }

void to_json(json& j, const Action& a) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ClueAction>)
                j = json{{"kind", "clue"}, {"text", v.text}};
            else if constexpr (std::is_same_v<T, VoteAction>)
                j = json{{"kind", "vote"}, {"target", v.target}};
            else if constexpr (std::is_same_v<T, GuessAction>)
                j = json{{"kind", "guess"}, {"word", v.word}};
            else if constexpr (std::is_same_v<T, ChoiceAction>)
                j = json{{"kind", "choice"}, {"cooperate", v.cooperate}};
            else if constexpr (std::is_same_v<T, ContributionAction>)
                j = json{{"kind", "contribution"}, {"amount", v.amount}};
            else if constexpr (std::is_same_v<T, ProposalAction>) {
                json shares = json::object();
                for (const auto& [p, x] : v.shares) shares[std::to_string(p.index)] = x;
                j = json{{"kind", "proposal"}, {"shares", shares}};
            } else if constexpr (std::is_same_v<T, ProposalVoteAction>)
                j = json{{"kind", "proposal_vote"}, {"proposer", v.proposer}};
            else if constexpr (std::is_same_v<T, RoleClaimAction>)
                j = json{{"kind", "role_claim"}, {"is_special", v.is_special}};
        },
        a);
}

void from_json(const json& j, Action& a) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "clue")
        a = ClueAction{j.at("text").get<std::string>()};
    else if (kind == "vote")
        a = VoteAction{j.at("target").get<PlayerId>()};
    else if (kind == "guess")
        a = GuessAction{j.at("word").get<std::string>()};
    else if (kind == "choice")
        a = ChoiceAction{j.at("cooperate").get<bool>()};
    else if (kind == "contribution")
        a = ContributionAction{j.at("amount").get<double>()};
    else if (kind == "proposal") {
        ProposalAction p;
        for (const auto& [k, v] : j.at("shares").items())
            p.shares[PlayerId{std::stoi(k)}] = v.get<double>();
        a = std::move(p);
    } else if (kind == "proposal_vote")
        a = ProposalVoteAction{j.at("proposer").get<PlayerId>()};
    else if (kind == "role_claim")
        a = RoleClaimAction{j.at("is_special").get<bool>()};
    else
        throw Error(Errc::InvalidField, "unknown action kind '" + kind + "'");
}

void to_json(json& j, const Visibility& v) {
    switch (v.kind) {
    case Visibility::Public: j = json{{"kind", "public"}}; break;
    case Visibility::ModeratorOnly: j = json{{"kind", "moderator_only"}}; break;
    case Visibility::Private: j = json{{"kind", "private"}, {"audience", v.audience}}; break;
    }
}

void from_json(const json& j, Visibility& v) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "public")
        v = Visibility::pub();
    else if (kind == "moderator_only")
        v = Visibility::moderator();
    else if (kind == "private")
        v = Visibility::priv(j.at("audience").get<std::vector<PlayerId>>());
    else
        throw Error(Errc::InvalidField, "unknown visibility '" + kind + "'");
}

void to_json(json& j, const GameEvent& e) {
    j = json{{"game_id", e.game_id}, {"turn", e.turn},
             {"seq", e.seq},         {"stage", stage_name(e.stage)},
             {"visibility", e.visibility}, {"raw_text", e.raw_text}};
    j["actor"] = e.actor ? json(*e.actor) : json("moderator");
    j["parsed_action"] = e.parsed_action ? json(*e.parsed_action) : json(nullptr);
}

void from_json(const json& j, GameEvent& e) {
    e.game_id = j.at("game_id").get<std::string>();
    e.turn = j.at("turn").get<int>();
    e.seq = j.at("seq").get<int>();
    e.stage = stage_from_name(j.at("stage").get<std::string>());
    e.visibility = j.at("visibility").get<Visibility>();
    e.raw_text = j.at("raw_text").get<std::string>();
    const json& actor = j.at("actor");
    e.actor = actor.is_string() ? std::nullopt : std::optional(actor.get<PlayerId>());
    const json& pa = j.at("parsed_action");
    e.parsed_action = pa.is_null() ? std::nullopt : std::optional(pa.get<Action>());
}

const char* stage_name(StageKind s) {
    switch (s) {
    case StageKind::Clue: return "clue";
    case StageKind::Accusation: return "accusation";
    case StageKind::Guess: return "guess";
    case StageKind::Proposal: return "proposal";
    case StageKind::Vote: return "vote";
    case StageKind::Choice: return "choice";
    case StageKind::Contribution: return "contribution";
    case StageKind::PgmAnalysis: return "pgm_analysis";
    case StageKind::RoleProbe: return "role_probe";
    case StageKind::ModeratorNote: return "moderator_note";
    }
    return "unknown";
}

StageKind stage_from_name(const std::string& name) {
    if (name == "clue") return StageKind::Clue;
    if (name == "accusation") return StageKind::Accusation;
    if (name == "guess") return StageKind::Guess;
    if (name == "proposal") return StageKind::Proposal;
    if (name == "vote") return StageKind::Vote;
    if (name == "choice") return StageKind::Choice;
    if (name == "contribution") return StageKind::Contribution;
    if (name == "pgm_analysis") return StageKind::PgmAnalysis;
    if (name == "role_probe") return StageKind::RoleProbe;
    if (name == "moderator_note") return StageKind::ModeratorNote;
    throw Error(Errc::InvalidField, "unknown stage '" + name + "'");
}

void to_json(json& j, const TopicSetting& s) {
    j = json{{"id", s.id},
             {"scenario", scenario_name(s.scenario)},
             {"challenger_position", s.challenger_position},
             {"players", s.players}};
    if (s.rounds) j["rounds"] = *s.rounds;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ChameleonTopic>) {
                j["topic"] = p.topic;
                j["secret_word"] = p.secret_word;
                j["chameleon_position"] = p.chameleon_position;
            } else if constexpr (std::is_same_v<T, UndercoverTopic>) {
                j["civilian_word"] = p.civilian_word;
                j["undercover_word"] = p.undercover_word;
                j["undercover_position"] = p.undercover_position;
            } else if constexpr (std::is_same_v<T, CostSharingTopic>) {
                j["total_fee"] = p.total_fee;
                j["usage_descriptions"] = p.usage_descriptions;
                if (p.standalone_costs) j["standalone_costs"] = *p.standalone_costs;
            } else if constexpr (std::is_same_v<T, PDScoring>) {
                j["cooperate"] = p.cooperate;
                j["defect"] = p.defect;
                j["one_defect"] = p.one_defect;
                j["two_defect"] = p.two_defect;
            } else if constexpr (std::is_same_v<T, PublicGoodTopic>) {
                j["multiplier"] = p.multiplier;
                j["initial_balance"] = p.initial_balance;
            }
        },
        s.payload);
}

namespace {

template <typename T>
T require(const json& j, const char* field) {
    if (!j.contains(field)) throw Error(Errc::MissingField, field);
    return j.at(field).get<T>();
}

} // namespace

void from_json(const json& j, TopicSetting& s) {
    s.id = j.value("id", "");
    s.scenario = scenario_from_name(require<std::string>(j, "scenario"));
    s.challenger_position = require<PlayerId>(j, "challenger_position");
    s.players = j.value("players", 3);
    s.rounds = j.contains("rounds") ? std::optional(j.at("rounds").get<int>()) : std::nullopt;
    switch (s.scenario) {
    case Scenario::Chameleon:
        s.payload = ChameleonTopic{require<std::string>(j, "topic"),
                                   require<std::string>(j, "secret_word"),
                                   require<PlayerId>(j, "chameleon_position")};
        break;
    case Scenario::Undercover:
        s.payload = UndercoverTopic{require<std::string>(j, "civilian_word"),
                                    require<std::string>(j, "undercover_word"),
                                    require<PlayerId>(j, "undercover_position")};
        break;
    case Scenario::CostSharing: {
        CostSharingTopic t;
        t.total_fee = require<double>(j, "total_fee");
        t.usage_descriptions = require<std::vector<std::string>>(j, "usage_descriptions");
        if (j.contains("standalone_costs"))
            t.standalone_costs = j.at("standalone_costs").get<std::vector<double>>();
        s.payload = std::move(t);
        break;
    }
    case Scenario::PrisonersDilemma:
        s.payload = PDScoring{require<double>(j, "cooperate"), require<double>(j, "defect"),
                              require<double>(j, "one_defect"), require<double>(j, "two_defect")};
        break;
    case Scenario::PublicGood:
        s.payload = PublicGoodTopic{require<double>(j, "multiplier"),
                                    j.value("initial_balance", 100.0)};
        break;
    }
}

void to_json(json& j, const Outcome& o) {
    j = json{{"scenario", scenario_name(o.scenario)},
             {"code", o.code},
             {"winners", std::vector<PlayerId>(o.winners.begin(), o.winners.end())},
             {"aborted", o.aborted},
             {"abort_reason", o.abort_reason}};
    json scores = json::object();
    for (const auto& [p, x] : o.per_player_scores) scores[std::to_string(p.index)] = x;
    j["per_player_scores"] = scores;
    j["agreed_proposer"] = o.agreed_proposer ? json(*o.agreed_proposer) : json(nullptr);
}

void from_json(const json& j, Outcome& o) {
    o.scenario = scenario_from_name(j.at("scenario").get<std::string>());
    o.code = j.at("code").get<int>();
    auto winners = j.at("winners").get<std::vector<PlayerId>>();
    o.winners = std::set<PlayerId>(winners.begin(), winners.end());
    o.aborted = j.at("aborted").get<bool>();
    o.abort_reason = j.at("abort_reason").get<std::string>();
    o.per_player_scores.clear();
    for (const auto& [k, v] : j.at("per_player_scores").items())
        o.per_player_scores[PlayerId{std::stoi(k)}] = v.get<double>();
    const json& ap = j.at("agreed_proposer");
    o.agreed_proposer = ap.is_null() ? std::nullopt : std::optional(ap.get<PlayerId>());
}

std::vector<TopicSetting> parse_topic_document(const json& doc) {
    if (doc.value("schema", "") != kTopicSchema)
        throw Error(Errc::InvalidField, "expected schema " + std::string(kTopicSchema));
    const std::string scenario = require<std::string>(doc, "scenario");
    std::vector<TopicSetting> out;
    int idx = 0;
    for (const json& entry : doc.at("settings")) {
        json merged = entry;
        merged["scenario"] = scenario;
        TopicSetting s = merged.get<TopicSetting>();
        if (s.id.empty()) s.id = scenario + "-" + std::to_string(idx);
        out.push_back(std::move(s));
        ++idx;
    }
    return out;
}

std::vector<TopicSetting> load_topic_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingField, "cannot open topic file " + path);
    json doc = json::parse(in);
    return parse_topic_document(doc);
}

} // namespace magic
