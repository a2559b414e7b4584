#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "magic/engine.hpp"
#include "magic/metrics.hpp"
#include "support.hpp"

using namespace magic;
using agents::Agent;
using agents::Directive;
using agents::ScriptedAgent;

namespace {

const TemplateSet& templates() {
    static TemplateSet t = TemplateSet::load(templates_manifest());
    return t;
}

TopicSetting chameleon_topic(int challenger, int chameleon) {
    TopicSetting s;
    s.id = "t-cham";
    s.scenario = Scenario::Chameleon;
    s.challenger_position = PlayerId{challenger};
    s.payload = ChameleonTopic{"Countries", "United Kingdom", PlayerId{chameleon}};
    return s;
}

TopicSetting undercover_topic(int challenger, int undercover) {
    TopicSetting s;
    s.id = "t-uc";
    s.scenario = Scenario::Undercover;
    s.challenger_position = PlayerId{challenger};
    s.payload = UndercoverTopic{"coffee", "tea", PlayerId{undercover}};
    return s;
}

std::map<PlayerId, std::shared_ptr<Agent>> scripted_seats(const json& p1, const json& p2,
                                                          const json& p3) {
    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    seats[PlayerId{1}] = std::make_shared<ScriptedAgent>("baseline", p1, 1);
    seats[PlayerId{2}] = std::make_shared<ScriptedAgent>("baseline", p2, 2);
    seats[PlayerId{3}] = std::make_shared<ScriptedAgent>("baseline", p3, 3);
    return seats;
}

std::vector<StageKind> stage_sequence(const Transcript& t) {
    std::vector<StageKind> out;
    for (const GameEvent& e : t.events()) out.push_back(e.stage);
    return out;
}

// Emits text no stage parser accepts.
class GarbageAgent : public Agent {
public:
    std::string act(const std::vector<GameEvent>&, const Directive&) override {
        ++calls;
        return "................";
    }
    std::string describe() const override { return "garbage"; }
    int calls = 0;
};

// Fails like a gateway would after its retry budget.
class FailingAgent : public Agent {
public:
    std::string act(const std::vector<GameEvent>&, const Directive&) override {
        throw Error(Errc::GatewayTimeout, "endpoint unreachable after 5 attempts");
    }
    std::string describe() const override { return "failing"; }
};

} // namespace

TEST_CASE("chameleon runs clue, accusation and optional guess stages in order") {
    using SK = StageKind;
    // all vote for the chameleon (Player 2); its scripted guess is wrong
    auto seats = scripted_seats(json{{"vote", "fixed"}, {"vote_target", 2}},
                                json{{"vote", "fixed"}, {"vote_target", 3}, {"guess", "France"}},
                                json{{"vote", "fixed"}, {"vote_target", 2}});
    auto setting = validate_topic_setting(chameleon_topic(1, 2));
    auto result = engine::run_competition(setting, seats, 7, templates());

    CHECK(result.outcome.code == 0); // caught, guessed wrong
    CHECK(result.outcome.winners == std::set<PlayerId>{PlayerId{1}, PlayerId{3}});
    CHECK(stage_sequence(result.transcript) ==
          std::vector<SK>{SK::ModeratorNote, SK::ModeratorNote, SK::ModeratorNote, // setup
                          SK::ModeratorNote, SK::Clue, SK::Clue, SK::Clue,          // clues
                          SK::ModeratorNote, SK::Accusation, SK::Accusation, SK::Accusation,
                          SK::ModeratorNote,                                       // vote result
                          SK::ModeratorNote, SK::Guess,                            // guess stage
                          SK::ModeratorNote});                                     // final note

    // guessing right instead yields code 3 and drops nobody
    auto seats_right = scripted_seats(
        json{{"vote", "fixed"}, {"vote_target", 2}},
        json{{"vote", "fixed"}, {"vote_target", 3}, {"guess", "united kingdom"}},
        json{{"vote", "fixed"}, {"vote_target", 2}});
    auto right = engine::run_competition(setting, seats_right, 7, templates());
    CHECK(right.outcome.code == 3);
    CHECK(right.outcome.winners == std::set<PlayerId>{PlayerId{2}});
}

TEST_CASE("guess stage occurs iff the outcome code is 0 or 3") {
    // sweep scripted vote targets over all assignments
    for (int v1 : {2, 3})
        for (int v2 : {1, 3})
            for (int v3 : {1, 2}) {
                auto seats = scripted_seats(json{{"vote", "fixed"}, {"vote_target", v1}},
                                            json{{"vote", "fixed"}, {"vote_target", v2}},
                                            json{{"vote", "fixed"}, {"vote_target", v3}});
                auto setting = validate_topic_setting(chameleon_topic(1, 2));
                auto result = engine::run_competition(setting, seats, 3, templates());
                bool has_guess = false;
                for (const GameEvent& e : result.transcript.events())
                    if (e.stage == StageKind::Guess) has_guess = true;
                CHECK(has_guess == (result.outcome.code == 0 || result.outcome.code == 3));
            }
}

TEST_CASE("undercover runs two clue rounds, probes every player, then one vote") {
    auto seats = scripted_seats(json{{"claim", "no"}}, json{{"claim", "yes"}},
                                json{{"claim", "no"}});
    auto setting = validate_topic_setting(undercover_topic(2, 2));
    auto result = engine::run_competition(setting, seats, 5, templates());

    int clue_rounds = 0, probes = 0, votes = 0;
    for (const GameEvent& e : result.transcript.events()) {
        if (e.stage == StageKind::Clue) ++clue_rounds;
        if (e.stage == StageKind::RoleProbe) ++probes;
        if (e.stage == StageKind::Accusation) ++votes;
    }
    CHECK(clue_rounds == 6); // 2 rounds x 3 players
    CHECK(probes == 3);
    CHECK(votes == 3);

    // probes are recorded before any vote and stay private to the actor
    int first_vote_seq = -1, last_probe_seq = -1;
    for (const GameEvent& e : result.transcript.events()) {
        if (e.stage == StageKind::Accusation && first_vote_seq < 0) first_vote_seq = e.seq;
        if (e.stage == StageKind::RoleProbe) {
            last_probe_seq = e.seq;
            CHECK(e.visibility ==
                  Visibility::priv({*e.actor}));
        }
    }
    CHECK(last_probe_seq < first_vote_seq);

    // baseline agents vote lowest-other: votes (2,1,1) -> P1 accused, a civilian
    CHECK(result.outcome.code == 0); // undercover won
    CHECK(result.outcome.winners == std::set<PlayerId>{PlayerId{2}});
}

TEST_CASE("every scenario emits its golden stage sequence") {
    using SK = StageKind;
    auto seats = [] { return scripted_seats(json::object(), json::object(), json::object()); };

    SUBCASE("undercover") {
        auto setting = validate_topic_setting(undercover_topic(1, 2));
        auto result = engine::run_competition(setting, seats(), 2, templates());
        std::vector<SK> expected = {SK::ModeratorNote, SK::ModeratorNote, SK::ModeratorNote,
                                    SK::ModeratorNote}; // welcome + 3 word reveals
        for (int round = 0; round < 2; ++round) {
            expected.push_back(SK::ModeratorNote); // round announcement
            expected.insert(expected.end(), {SK::Clue, SK::Clue, SK::Clue});
        }
        for (int p = 0; p < 3; ++p)
            expected.insert(expected.end(), {SK::ModeratorNote, SK::RoleProbe});
        expected.insert(expected.end(), {SK::ModeratorNote, SK::Accusation, SK::Accusation,
                                         SK::Accusation, SK::ModeratorNote, SK::ModeratorNote});
        CHECK(stage_sequence(result.transcript) == expected);
    }

    SUBCASE("prisoners dilemma") {
        TopicSetting raw;
        raw.id = "g-pd";
        raw.scenario = Scenario::PrisonersDilemma;
        raw.challenger_position = PlayerId{1};
        raw.payload = PDScoring{3, 1, 5, 2};
        auto result =
            engine::run_competition(validate_topic_setting(raw), seats(), 2, templates());
        std::vector<SK> expected = {SK::ModeratorNote}; // rules
        for (int round = 0; round < 5; ++round)
            expected.insert(expected.end(), {SK::ModeratorNote, SK::Choice, SK::Choice,
                                             SK::Choice, SK::ModeratorNote});
        expected.push_back(SK::ModeratorNote); // winners
        CHECK(stage_sequence(result.transcript) == expected);
    }

    SUBCASE("public good") {
        TopicSetting raw;
        raw.id = "g-pg";
        raw.scenario = Scenario::PublicGood;
        raw.challenger_position = PlayerId{1};
        raw.payload = PublicGoodTopic{1.5, 100.0};
        auto result =
            engine::run_competition(validate_topic_setting(raw), seats(), 2, templates());
        std::vector<SK> expected = {SK::ModeratorNote}; // rules
        for (int round = 0; round < 5; ++round)
            expected.insert(expected.end(), {SK::ModeratorNote, SK::Contribution,
                                             SK::Contribution, SK::Contribution,
                                             SK::ModeratorNote});
        expected.push_back(SK::ModeratorNote); // settlement
        CHECK(stage_sequence(result.transcript) == expected);
    }

    SUBCASE("cost sharing, consensus in round one") {
        TopicSetting raw;
        raw.id = "g-cs";
        raw.scenario = Scenario::CostSharing;
        raw.challenger_position = PlayerId{1};
        raw.payload = CostSharingTopic{900.0, {"a", "b", "c"}, std::nullopt};
        auto result =
            engine::run_competition(validate_topic_setting(raw), seats(), 2, templates());
        std::vector<SK> expected = {
            SK::ModeratorNote,                                        // kickoff
            SK::ModeratorNote, SK::Proposal, SK::Proposal, SK::Proposal,
            SK::ModeratorNote, SK::Vote, SK::Vote, SK::Vote,
            SK::ModeratorNote};                                       // consensus
        CHECK(stage_sequence(result.transcript) == expected);
    }

    // private audiences never name a non-participant, whatever the scenario
    for (auto* topic_fn : {&chameleon_topic, &undercover_topic}) {
        auto result = engine::run_competition(validate_topic_setting(topic_fn(1, 2)), seats(), 2,
                                              templates());
        for (const GameEvent& e : result.transcript.events())
            for (PlayerId p : e.visibility.audience) {
                CHECK(p.index >= 1);
                CHECK(p.index <= 3);
            }
    }
}

TEST_CASE("undercover generalizes to four players") {
    TopicSetting raw;
    raw.id = "t-uc4";
    raw.scenario = Scenario::Undercover;
    raw.players = 4;
    raw.challenger_position = PlayerId{4};
    raw.payload = UndercoverTopic{"coffee", "tea", PlayerId{1}};
    auto setting = validate_topic_setting(raw);

    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    for (int k = 1; k <= 4; ++k)
        seats[PlayerId{k}] = std::make_shared<ScriptedAgent>("baseline", json::object(), k);
    auto result = engine::run_competition(setting, seats, 5, templates());

    CHECK(!result.outcome.aborted);
    // lowest-other voting: P1 votes P2, everyone else votes P1, so the
    // plurality lands on the undercover and the civilians win
    CHECK(result.outcome.code == 1);
    int probes = 0, clues = 0;
    for (const GameEvent& e : result.transcript.events()) {
        if (e.stage == StageKind::RoleProbe) ++probes;
        if (e.stage == StageKind::Clue) ++clues;
    }
    CHECK(probes == 4);
    CHECK(clues == 8);
    CHECK(result.outcome.per_player_scores.at(PlayerId{4}) == 3.0); // civilian credit
}

TEST_CASE("PD with three always-cooperate scripts pays 5 x cooperate to each") {
    TopicSetting raw;
    raw.id = "t-pd";
    raw.scenario = Scenario::PrisonersDilemma;
    raw.challenger_position = PlayerId{1};
    raw.payload = PDScoring{3, 1, 5, 2};
    auto setting = validate_topic_setting(raw);

    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    for (int k = 1; k <= 3; ++k)
        seats[PlayerId{k}] =
            std::make_shared<ScriptedAgent>("always_cooperate", json::object(), k);
    auto result = engine::run_competition(setting, seats, 11, templates());

    for (int k = 1; k <= 3; ++k)
        CHECK(result.outcome.per_player_scores.at(PlayerId{k}) == 15.0);
    CHECK(result.outcome.winners ==
          std::set<PlayerId>{PlayerId{1}, PlayerId{2}, PlayerId{3}});

    // choices stay private to their actor until the round note
    for (const GameEvent& e : result.transcript.events())
        if (e.stage == StageKind::Choice) CHECK(e.visibility == Visibility::priv({*e.actor}));
}

TEST_CASE("public good tracks the per-game budget and settles once") {
    TopicSetting raw;
    raw.id = "t-pg";
    raw.scenario = Scenario::PublicGood;
    raw.challenger_position = PlayerId{1};
    raw.payload = PublicGoodTopic{2.0, 100.0};
    auto setting = validate_topic_setting(raw);

    // 30/round would exceed the 100 budget by round 4; the overdraft is
    // rejected and the default contribution 0 applies from then on.
    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    seats[PlayerId{1}] = std::make_shared<ScriptedAgent>(
        "fixed_contributor", json{{"contribution", 30.0}}, 1);
    seats[PlayerId{2}] = std::make_shared<ScriptedAgent>("zero_contributor", json::object(), 2);
    seats[PlayerId{3}] = std::make_shared<ScriptedAgent>(
        "fixed_contributor", json{{"contribution", 10.0}}, 3);
    auto result = engine::run_competition(setting, seats, 13, templates());

    // P1 contributes 30,30,30,10(clamped via budget hint),0 -> exactly 100
    double p1_total = 0.0, pool = 0.0;
    for (const GameEvent& e : result.transcript.events())
        if (e.stage == StageKind::Contribution && e.parsed_action) {
            double x = std::get<ContributionAction>(*e.parsed_action).amount;
            pool += x;
            if (e.actor == PlayerId{1}) p1_total += x;
        }
    CHECK(p1_total == doctest::Approx(100.0));
    CHECK(pool == doctest::Approx(150.0));
    double payback = 2.0 * pool / 3.0;
    CHECK(result.outcome.per_player_scores.at(PlayerId{2}) == doctest::Approx(100.0 + payback));
    CHECK(result.outcome.per_player_scores.at(PlayerId{1}) == doctest::Approx(payback));
    CHECK(result.outcome.winners == std::set<PlayerId>{PlayerId{2}});
}

TEST_CASE("cost sharing reaches consensus when votes align") {
    TopicSetting raw;
    raw.id = "t-cs";
    raw.scenario = Scenario::CostSharing;
    raw.challenger_position = PlayerId{2};
    raw.payload = CostSharingTopic{900.0, {"a", "b", "c"}, std::nullopt};
    auto setting = validate_topic_setting(raw);

    auto seats = scripted_seats(json::object(), json::object(), json::object());
    auto result = engine::run_competition(setting, seats, 17, templates());
    CHECK(result.outcome.code == 1);
    CHECK(result.outcome.agreed_proposer == PlayerId{1}); // everyone votes lowest
    CHECK(result.outcome.per_player_scores.at(PlayerId{2}) == doctest::Approx(300.0));

    // voting own proposals never converges; after max rounds the game fails
    auto stubborn = scripted_seats(json{{"proposal_vote", "own"}}, json{{"proposal_vote", "own"}},
                                   json{{"proposal_vote", "own"}});
    auto failed = engine::run_competition(setting, stubborn, 17, templates());
    CHECK(failed.outcome.code == 0);
    CHECK(failed.outcome.winners.empty());
    int proposal_rounds = 0;
    for (const GameEvent& e : failed.transcript.events())
        if (e.stage == StageKind::Proposal) ++proposal_rounds;
    CHECK(proposal_rounds == 15); // 5 rounds x 3 players
}

TEST_CASE("same inputs and seed give byte-identical serialized transcripts") {
    auto setting = validate_topic_setting(chameleon_topic(1, 2));
    TempDir a("det_a"), b("det_b");
    for (const TempDir* dir : {&a, &b}) {
        auto seats = scripted_seats(json::object(), json::object(), json::object());
        auto result = engine::run_competition(setting, seats, 42, templates());
        engine::write_transcript(result.transcript, 42, dir->str());
    }
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    auto rel = std::filesystem::path("chameleon") / "t-cham";
    CHECK(slurp(a.path() / rel / "42.jsonl") == slurp(b.path() / rel / "42.jsonl"));
    CHECK(!slurp(a.path() / rel / "42.jsonl").empty());
    CHECK(slurp(a.path() / rel / "42.meta.json") == slurp(b.path() / rel / "42.meta.json"));
}

TEST_CASE("transcripts round-trip through the JSONL store") {
    auto setting = validate_topic_setting(undercover_topic(1, 3));
    auto seats = scripted_seats(json::object(), json::object(), json::object());
    auto result = engine::run_competition(setting, seats, 9, templates());

    TempDir dir("store");
    engine::write_transcript(result.transcript, 9, dir.str());
    auto stored = engine::read_transcript_dir(dir.str());
    REQUIRE(stored.size() == 1);
    CHECK(stored[0].seed == 9);
    CHECK(stored[0].transcript.events() == result.transcript.events());
    CHECK(*stored[0].transcript.outcome() == result.outcome);
    CHECK(stored[0].transcript.setting() == result.transcript.setting());
}

TEST_CASE("unparseable replies fall back to defaults after three re-prompts") {
    TopicSetting raw;
    raw.id = "t-garbage";
    raw.scenario = Scenario::PrisonersDilemma;
    raw.challenger_position = PlayerId{1};
    raw.payload = PDScoring{3, 1, 5, 2};
    auto setting = validate_topic_setting(raw);

    auto garbage = std::make_shared<GarbageAgent>();
    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    seats[PlayerId{1}] = garbage;
    seats[PlayerId{2}] = std::make_shared<ScriptedAgent>("always_cooperate", json::object(), 2);
    seats[PlayerId{3}] = std::make_shared<ScriptedAgent>("always_cooperate", json::object(), 3);
    auto result = engine::run_competition(setting, seats, 1, templates());

    CHECK(!result.outcome.aborted);
    CHECK(garbage->calls == 5 * 4); // 1 try + 3 re-prompts per round
    // default Choice is Cooperate, so everyone scores 5 x cooperate
    CHECK(result.outcome.per_player_scores.at(PlayerId{1}) == 15.0);
    int default_notes = 0;
    for (const GameEvent& e : result.transcript.events())
        if (e.stage == StageKind::ModeratorNote &&
            e.raw_text.find("default action applied") != std::string::npos)
            ++default_notes;
    CHECK(default_notes == 5);
}

TEST_CASE("gateway failure aborts the game and metrics skip it") {
    auto setting = validate_topic_setting(chameleon_topic(1, 2));
    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    seats[PlayerId{1}] = std::make_shared<FailingAgent>();
    seats[PlayerId{2}] = std::make_shared<ScriptedAgent>("baseline", json::object(), 2);
    seats[PlayerId{3}] = std::make_shared<ScriptedAgent>("baseline", json::object(), 3);
    auto result = engine::run_competition(setting, seats, 1, templates());

    CHECK(result.outcome.aborted);
    CHECK(result.outcome.abort_reason.find("GatewayTimeout") != std::string::npos);

    std::vector<Transcript> transcripts;
    transcripts.push_back(result.transcript);
    auto counts = metrics::extract_counts(transcripts);
    CHECK(counts == metrics::MetricCounts{});
}

TEST_CASE("agents see exactly their view plus the directive") {
    // A spy agent records the views it receives; they must match
    // view_for(transcript, seat) prefixes.
    struct SpyAgent : Agent {
        std::vector<std::vector<GameEvent>> seen;
        std::string act(const std::vector<GameEvent>& view, const Directive& d) override {
            seen.push_back(view);
            if (d.stage == StageKind::Clue) return "a hint";
            if (d.stage == StageKind::Accusation) return "Player 3";
            if (d.stage == StageKind::Guess) return "I guess something";
            return "ok";
        }
        std::string describe() const override { return "spy"; }
    };
    auto spy = std::make_shared<SpyAgent>();
    std::map<PlayerId, std::shared_ptr<Agent>> seats;
    seats[PlayerId{1}] = spy;
    seats[PlayerId{2}] = std::make_shared<ScriptedAgent>("baseline", json::object(), 2);
    seats[PlayerId{3}] = std::make_shared<ScriptedAgent>("baseline", json::object(), 3);
    auto setting = validate_topic_setting(chameleon_topic(1, 2));
    auto result = engine::run_competition(setting, seats, 21, templates());

    auto full_view = view_for(result.transcript, PlayerId{1});
    for (const auto& seen : spy->seen) {
        REQUIRE(seen.size() <= full_view.size());
        for (size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == full_view[i]);
    }
    CHECK(spy->seen.size() == 2); // one clue, one vote; no guess for a non-chameleon seat
}
