#include "magic/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "magic/games_social.hpp"
#include "magic/games_theory.hpp"

namespace fs = std::filesystem;

namespace magic::engine {

namespace {

bool is_decision_stage(StageKind stage) {
    switch (stage) {
    case StageKind::Clue:
    case StageKind::Accusation:
    case StageKind::Guess:
    case StageKind::Proposal:
    case StageKind::Vote:
    case StageKind::Choice:
    case StageKind::Contribution: return true;
    default: return false;
    }
}

bool is_parse_failure(Errc code) {
    switch (code) {
    case Errc::Ambiguous:
    case Errc::NoMatch:
    case Errc::SelfVote:
    case Errc::UnknownTarget:
    case Errc::NegativeAmount:
    case Errc::InvalidField:
    case Errc::Overdraft:
    case Errc::WrongPlayerCount:
    case Errc::VoteForMissingProposal: return true;
    default: return false;
    }
}

class GameRunner {
public:
    GameRunner(const ValidatedSetting& setting,
               const std::map<PlayerId, std::shared_ptr<agents::Agent>>& players, uint64_t seed,
               const TemplateSet& templates)
        : setting_(setting), players_(players), seed_(seed), templates_(templates) {
        if (static_cast<int>(players.size()) != setting.players())
            throw Error(Errc::WrongPlayerCount, "need one agent per player");
        game_id_ = std::string(scenario_name(setting.scenario())) + "/" + setting.get().id + "/" +
                   std::to_string(seed);
        transcript_ = Transcript(game_id_, setting);
        bind_agents();
    }

    GameResult run() {
        try {
            switch (setting_.scenario()) {
            case Scenario::Chameleon: run_chameleon(); break;
            case Scenario::Undercover: run_undercover(); break;
            case Scenario::CostSharing: run_cost_sharing(); break;
            case Scenario::PrisonersDilemma: run_prisoners_dilemma(); break;
            case Scenario::PublicGood: run_public_good(); break;
            }
        } catch (const Error& e) {
            Outcome aborted;
            aborted.scenario = setting_.scenario();
            aborted.aborted = true;
            aborted.abort_reason = e.what();
            note(Visibility::moderator(), std::string("game aborted: ") + e.what());
            transcript_.set_outcome(aborted);
            return {aborted, std::move(transcript_)};
        }
        return {*transcript_.outcome(), std::move(transcript_)};
    }

private:
    // ── plumbing ─────────────────────────────────────────────────────

    void bind_agents() {
        const TopicSetting& s = setting_.get();
        std::map<std::string, std::string> common;
        common["max_turns"] = std::to_string(setting_.rounds());
        common["game_round"] = std::to_string(setting_.rounds());
        if (const auto* pd = std::get_if<PDScoring>(&s.payload)) {
            common["cooperate"] = format_number(pd->cooperate);
            common["defect"] = format_number(pd->defect);
            common["one_defect"] = format_number(pd->one_defect);
            common["two_defect"] = format_number(pd->two_defect);
        }
        if (const auto* pg = std::get_if<PublicGoodTopic>(&s.payload)) {
            common["multiplier"] = format_number(pg->multiplier);
            common["initial_balance"] = format_number(pg->initial_balance);
        }
        if (const auto* cs = std::get_if<CostSharingTopic>(&s.payload))
            common["total_fee"] = format_number(cs->total_fee);

        for (auto& [p, agent] : players_) {
            agents::GameBrief brief;
            brief.scenario = s.scenario;
            brief.players = setting_.players();
            brief.rounds = setting_.rounds();
            brief.self = p;
            brief.vars = common;
            brief.vars["player"] = player_name(p);
            brief.vars["player_name"] = player_name(p);
            int slot = 1;
            for (int k = 1; k <= setting_.players(); ++k) {
                if (k == p.index) continue;
                brief.vars["other_player_" + std::to_string(slot)] = player_name(PlayerId{k});
                brief.vars["oth_player" + std::to_string(slot)] = player_name(PlayerId{k});
                ++slot;
            }
            if (const auto* uc = std::get_if<UndercoverTopic>(&s.payload))
                brief.vars["code"] = p == uc->undercover_position ? uc->undercover_word
                                                                  : uc->civilian_word;
            agent->bind(std::move(brief));
        }
    }

    void note(Visibility vis, std::string text) {
        GameEvent e;
        e.game_id = game_id_;
        e.turn = turn_;
        e.seq = seq_++;
        e.stage = StageKind::ModeratorNote;
        e.actor = std::nullopt;
        e.visibility = std::move(vis);
        e.raw_text = std::move(text);
        transcript_.append(std::move(e));
    }

    void append_action(PlayerId p, StageKind stage, Visibility vis, std::string raw,
                       std::optional<Action> action) {
        GameEvent e;
        e.game_id = game_id_;
        e.turn = turn_;
        e.seq = seq_++;
        e.stage = stage;
        e.actor = p;
        e.visibility = std::move(vis);
        e.raw_text = std::move(raw);
        e.parsed_action = std::move(action);
        transcript_.append(std::move(e));
    }

    std::vector<GameEvent> view(PlayerId p) const { return view_for(transcript_, p); }

    std::string pgm_role_key(PlayerId p) const {
        switch (setting_.scenario()) {
        case Scenario::Chameleon:
            return p == *setting_.hidden_player() ? "chameleon" : "non_chameleon";
        case Scenario::Undercover: return "undercover_unknown";
        default: return "theory";
        }
    }

    // Decision prompt for a PGM agent; the paper's role- and
    // branch-specific templates apply to the action stages, ordinary
    // directives elsewhere.
    std::string decision_directive(PlayerId p, StageKind stage, const agents::Beliefs& beliefs,
                                   const std::string& fallback) {
        const agents::Agent& agent = *players_.at(p);
        std::map<std::string, std::string> vars = agent.brief().vars;
        PlayerId target = beliefs.top_suspect().value_or(lowest_other(p));
        vars["target_player"] = player_name(target);
        const char* scen = scenario_name(setting_.scenario());
        switch (setting_.scenario()) {
        case Scenario::Chameleon:
            if (stage == StageKind::Clue)
                return templates_.render(scen, pgm_role_key(p), "decision", vars);
            break;
        case Scenario::Undercover:
            if (stage == StageKind::Clue) {
                std::string branch = beliefs.self_claim.value_or(false) ? "undercover"
                                     : beliefs.top_suspect()            ? "civilian"
                                                                        : "not_sure";
                return templates_.render(scen, branch, "decision", vars);
            }
            break;
        case Scenario::CostSharing:
            if (stage == StageKind::Proposal) return templates_.render(scen, "any", "decision", vars);
            break;
        case Scenario::PrisonersDilemma:
            if (stage == StageKind::Choice) return templates_.render(scen, "any", "decision", vars);
            break;
        case Scenario::PublicGood:
            if (stage == StageKind::Contribution)
                return templates_.render(scen, "any", "decision", vars);
            break;
        }
        return fallback;
    }

    PlayerId lowest_other(PlayerId p) const {
        for (int k = 1; k <= setting_.players(); ++k)
            if (k != p.index) return PlayerId{k};
        throw Error(Errc::InvalidField, "no other player");
    }

    using Validator = std::function<void(const Action&)>;

    Action decide(PlayerId p, StageKind stage, const std::string& directive_text, json extra,
                  Visibility vis, bool pgm_wrap = true, const Validator& validate = {}) {
        auto agent = players_.at(p);
        agents::ParseContext pctx;
        pctx.self = p;
        pctx.players = setting_.players();
        pctx.total_fee = total_fee();

        std::optional<agents::Beliefs> beliefs;
        if (pgm_wrap && agent->is_pgm() && is_decision_stage(stage)) {
            beliefs = agents::pgm_construct(*agent, view(p), pgm_role_key(p));
            append_action(p, StageKind::PgmAnalysis, Visibility::priv({p}), beliefs->raw_text,
                          std::nullopt);
        }
        std::string base = beliefs ? decision_directive(p, stage, *beliefs, directive_text)
                                   : directive_text;

        agents::Directive directive{stage, base, std::move(extra)};
        for (int attempt = 0; attempt <= kMaxReprompts; ++attempt) {
            std::string raw = beliefs ? agents::pgm_decide(*agent, view(p), *beliefs, directive)
                                      : agent->act(view(p), directive);
            try {
                Action action = agents::parse_action(raw, stage, pctx);
                if (validate) validate(action);
                append_action(p, stage, vis, std::move(raw), action);
                return action;
            } catch (const Error& e) {
                if (!is_parse_failure(e.code())) throw;
                directive.text = base + "\n(Your previous reply was not accepted: " + e.what() +
                                 ". Follow the required format.)";
            }
        }
        Action action = agents::default_action(stage, pctx);
        note(Visibility::moderator(),
             player_name(p) + " gave no acceptable reply; default action applied");
        append_action(p, stage, vis, agents::render_action(action), action);
        return action;
    }

    double total_fee() const {
        if (const auto* cs = std::get_if<CostSharingTopic>(&setting_.get().payload))
            return cs->total_fee;
        return 0.0;
    }

    // ── votes shared by the two social games ─────────────────────────

    std::map<PlayerId, PlayerId> accusation_round(const std::string& hidden_role) {
        ++turn_;
        note(Visibility::pub(), "Accusation stage: vote for the player who is most likely the " +
                                    hidden_role +
                                    ". You cannot vote for yourself. Reply with 'Player x'.");
        std::map<PlayerId, PlayerId> votes;
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            Action a = decide(p, StageKind::Accusation,
                              player_name(p) + ", cast your vote now. Reply with 'Player x'.",
                              json::object(), Visibility::pub());
            votes[p] = std::get<VoteAction>(a).target;
        }
        VoteResult vr = tally_votes(votes);
        std::ostringstream summary;
        summary << "Votes are in:";
        for (const auto& [voter, target] : votes)
            summary << " " << player_name(voter) << " voted for " << player_name(target) << ".";
        if (vr.is_tie)
            summary << " The vote is tied.";
        else
            summary << " " << player_name(*vr.top.begin()) << " received the most votes.";
        note(Visibility::pub(), summary.str());
        return votes;
    }

    // ── scenarios ────────────────────────────────────────────────────

    void run_chameleon() {
        const auto& topic = std::get<ChameleonTopic>(setting_.get().payload);
        const PlayerId cham = topic.chameleon_position;
        std::vector<PlayerId> non_chams;
        for (int k = 1; k <= setting_.players(); ++k)
            if (PlayerId{k} != cham) non_chams.push_back(PlayerId{k});

        note(Visibility::pub(),
             "Welcome to the Chameleon game. The topic of the secret word is: " + topic.topic + ".");
        note(Visibility::priv(non_chams), "The secret word is: " + topic.secret_word + ".");
        note(Visibility::priv({cham}),
             "You are the chameleon. You do not know the secret word; blend in and try to figure "
             "it out.");

        ++turn_;
        note(Visibility::pub(),
             "Giving clues stage: each player describes the secret word in one short clue, in "
             "order.");
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            decide(p, StageKind::Clue,
                   player_name(p) + ", give your clue about the secret word now. Reply with one "
                                    "short clue sentence.",
                   json::object(), Visibility::pub());
        }

        std::map<PlayerId, PlayerId> votes = accusation_round("chameleon");
        VoteResult vr = tally_votes(votes);

        std::optional<std::string> guess;
        if (!vr.is_tie && vr.top.contains(cham)) {
            ++turn_;
            note(Visibility::pub(), "The accusation was correct: " + player_name(cham) +
                                        " is the chameleon. " + player_name(cham) +
                                        ", guess the secret word.");
            Action a = decide(cham, StageKind::Guess,
                              player_name(cham) +
                                  ", guess the secret word based on the clues. You must reply "
                                  "with the template 'I guess xx'.",
                              json::object(), Visibility::pub());
            guess = std::get<GuessAction>(a).word;
        }

        int code =
            social::resolve_chameleon(votes, guess, social::ChameleonTruth{cham, topic.secret_word});

        Outcome outcome;
        outcome.scenario = Scenario::Chameleon;
        outcome.code = code;
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            RoleKind role = p == cham ? RoleKind::Chameleon : RoleKind::NonChameleon;
            outcome.per_player_scores[p] = social::role_credit(Scenario::Chameleon, role, code);
        }
        if (code == 1 || code == 3)
            outcome.winners = {cham};
        else if (code == 0)
            outcome.winners = std::set<PlayerId>(non_chams.begin(), non_chams.end());

        static const char* kSummary[] = {"the non-chameleons won", "the chameleon won",
                                         "the vote was even", "the chameleon guessed the word"};
        note(Visibility::pub(), std::string("Game over: ") + kSummary[code] + ".");
        transcript_.set_outcome(outcome);
    }

    void run_undercover() {
        const auto& topic = std::get<UndercoverTopic>(setting_.get().payload);
        const PlayerId uc = topic.undercover_position;

        note(Visibility::pub(),
             "Welcome to Undercover. Each player has received a word; one player's word is "
             "different from the others'.");
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            note(Visibility::priv({p}),
                 "Your word is: " + (p == uc ? topic.undercover_word : topic.civilian_word) + ".");
        }

        for (int r = 1; r <= setting_.rounds(); ++r) {
            ++turn_;
            note(Visibility::pub(), "Clue round " + std::to_string(r) + " of " +
                                        std::to_string(setting_.rounds()) +
                                        ": each player gives one clue about their own word, in "
                                        "order. Don't be too specific.");
            for (int k = 1; k <= setting_.players(); ++k) {
                PlayerId p{k};
                decide(p, StageKind::Clue,
                       player_name(p) + ", give one clue about your word now. Reply with one "
                                        "short clue sentence.",
                       json{{"round", r}}, Visibility::pub());
            }
        }

        // Self-awareness probe, after the final clue round and before the vote.
        ++turn_;
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            std::string question = templates_.render("undercover", "any", "probe",
                                                     players_.at(p)->brief().vars);
            note(Visibility::priv({p}), question);
            decide(p, StageKind::RoleProbe, question + " You must reply with 'yes' or 'no'.",
                   json::object(), Visibility::priv({p}), /*pgm_wrap=*/false);
        }

        std::map<PlayerId, PlayerId> votes = accusation_round("undercover");
        int code = social::resolve_undercover(votes, uc);

        Outcome outcome;
        outcome.scenario = Scenario::Undercover;
        outcome.code = code;
        for (int k = 1; k <= setting_.players(); ++k) {
            PlayerId p{k};
            RoleKind role = p == uc ? RoleKind::Undercover : RoleKind::Civilian;
            outcome.per_player_scores[p] = social::role_credit(Scenario::Undercover, role, code);
            if (code == 0 && p == uc) outcome.winners.insert(p);
            if (code == 1 && p != uc) outcome.winners.insert(p);
        }
        static const char* kSummary[] = {"the undercover won", "the civilians won",
                                         "the vote was even"};
        note(Visibility::pub(), std::string("Game over: ") + kSummary[code] + ".");
        transcript_.set_outcome(outcome);
    }

    void run_cost_sharing() {
        const auto& topic = std::get<CostSharingTopic>(setting_.get().payload);
        const int n = setting_.players();

        std::ostringstream kickoff;
        kickoff << "Airport fee allocation: the total fee of " << format_number(topic.total_fee)
                << " must be fully split between the " << n
                << " airlines. Usage descriptions:";
        for (int k = 1; k <= n; ++k)
            kickoff << "\n" << player_name(PlayerId{k}) << ": "
                    << topic.usage_descriptions[static_cast<size_t>(k - 1)];
        note(Visibility::pub(), kickoff.str());

        std::optional<std::map<PlayerId, double>> standalone;
        if (topic.standalone_costs) {
            standalone.emplace();
            for (int k = 1; k <= n; ++k)
                (*standalone)[PlayerId{k}] = (*topic.standalone_costs)[static_cast<size_t>(k - 1)];
        }

        json extra{{"total_fee", topic.total_fee}};
        if (topic.standalone_costs) extra["standalone_costs"] = *topic.standalone_costs;

        std::string format_hint = "You must reply with the template '";
        for (int k = 1; k <= n; ++k)
            format_hint += player_name(PlayerId{k}) + ": xx" + (k < n ? ", " : "'.");

        Outcome outcome;
        outcome.scenario = Scenario::CostSharing;
        outcome.code = 0;

        for (int r = 1; r <= setting_.rounds(); ++r) {
            ++turn_;
            note(Visibility::pub(), "Round " + std::to_string(r) + " of " +
                                        std::to_string(setting_.rounds()) +
                                        " - proposals: each airline proposes a full cost split. " +
                                        format_hint);
            std::vector<theory::Proposal> proposals;
            for (int k = 1; k <= n; ++k) {
                PlayerId p{k};
                auto validator = [&](const Action& a) {
                    theory::Proposal prop{p, std::get<ProposalAction>(a).shares};
                    theory::validate_proposal(prop, topic.total_fee, n);
                    auto violations = theory::cs_fairness_check(prop, standalone);
                    if (!violations.empty())
                        throw Error(Errc::InvalidField,
                                    "fairness check failed: " + player_name(violations.front()) +
                                        "'s share exceeds its standalone cost");
                };
                Action a = decide(p, StageKind::Proposal,
                                  player_name(p) + ", propose a cost distribution. " + format_hint,
                                  extra, Visibility::pub(), true, validator);
                proposals.push_back({p, std::get<ProposalAction>(a).shares});
            }

            ++turn_;
            note(Visibility::pub(),
                 "Round " + std::to_string(r) +
                     " - voting: vote for the proposer whose split you accept (your own counts). "
                     "Reply with 'Player x'.");
            std::map<PlayerId, PlayerId> votes;
            for (int k = 1; k <= n; ++k) {
                PlayerId p{k};
                Action a = decide(p, StageKind::Vote,
                                  player_name(p) +
                                      ", vote for the proposal you accept. Reply with 'Player x' "
                                      "naming the proposer.",
                                  json::object(), Visibility::pub());
                votes[p] = std::get<ProposalVoteAction>(a).proposer;
            }

            std::optional<theory::Proposal> agreed = theory::cs_resolve_round(proposals, votes);
            if (agreed) {
                outcome.code = 1;
                outcome.agreed_proposer = agreed->proposer;
                for (const auto& [p, share] : agreed->shares) outcome.per_player_scores[p] = share;
                for (int k = 1; k <= n; ++k) outcome.winners.insert(PlayerId{k});
                note(Visibility::pub(), "Consensus reached on " + player_name(agreed->proposer) +
                                            "'s proposal. The game ends successfully.");
                transcript_.set_outcome(outcome);
                return;
            }
            note(Visibility::pub(), "No consensus this round.");
        }
        note(Visibility::pub(), "No consensus after " + std::to_string(setting_.rounds()) +
                                    " rounds: the game fails.");
        transcript_.set_outcome(outcome);
    }

    void run_prisoners_dilemma() {
        const auto& scoring = std::get<PDScoring>(setting_.get().payload);
        const int n = setting_.players();

        std::ostringstream rules;
        rules << "Iterative three-player prisoners' dilemma, " << setting_.rounds()
              << " rounds. Per round: all cooperate -> " << format_number(scoring.cooperate)
              << " each; all defect -> " << format_number(scoring.defect)
              << " each; a single defector gets " << format_number(scoring.one_defect)
              << " and the cooperators 0; two defectors get " << format_number(scoring.two_defect)
              << " each and the cooperator 0. Highest total wins.";
        note(Visibility::pub(), rules.str());

        std::map<PlayerId, double> totals;
        for (int k = 1; k <= n; ++k) totals[PlayerId{k}] = 0.0;

        for (int r = 1; r <= setting_.rounds(); ++r) {
            ++turn_;
            note(Visibility::pub(), "Round " + std::to_string(r) +
                                        ": choose your action. You must reply with 'defect' or "
                                        "'cooperate'.");
            std::map<PlayerId, theory::PDChoice> choices;
            for (int k = 1; k <= n; ++k) {
                PlayerId p{k};
                Action a = decide(p, StageKind::Choice,
                                  player_name(p) + ", choose now. You must reply with 'defect' or "
                                                   "'cooperate'.",
                                  json{{"round", r}}, Visibility::priv({p}));
                choices[p] = std::get<ChoiceAction>(a).cooperate ? theory::PDChoice::Cooperate
                                                                 : theory::PDChoice::Defect;
            }
            std::map<PlayerId, double> payoffs = theory::pd_payoffs(choices, scoring);
            std::ostringstream results;
            results << "Round " << r << " results:";
            for (const auto& [p, choice] : choices) {
                totals[p] += payoffs[p];
                results << " " << player_name(p) << " chose "
                        << (choice == theory::PDChoice::Defect ? "defect" : "cooperate") << " (+"
                        << format_number(payoffs[p]) << ").";
            }
            results << " Totals:";
            for (const auto& [p, t] : totals)
                results << " " << player_name(p) << ": " << format_number(t) << ".";
            note(Visibility::pub(), results.str());
        }

        Outcome outcome;
        outcome.scenario = Scenario::PrisonersDilemma;
        outcome.per_player_scores = totals;
        outcome.winners = theory::theory_winners(totals);
        std::ostringstream fin;
        fin << "Game over. Winner(s):";
        for (PlayerId w : outcome.winners) fin << " " << player_name(w);
        note(Visibility::pub(), fin.str());
        transcript_.set_outcome(outcome);
    }

    void run_public_good() {
        const auto& topic = std::get<PublicGoodTopic>(setting_.get().payload);
        const int n = setting_.players();

        std::ostringstream rules;
        rules << "Public Good game: each player begins with " << format_number(topic.initial_balance)
              << " monetary points. Over " << setting_.rounds()
              << " rounds you decide how many points to contribute to a communal pool. At the end "
                 "the pool is multiplied by "
              << format_number(topic.multiplier)
              << " and distributed equally among all players. Highest final total wins.";
        note(Visibility::pub(), rules.str());

        std::map<PlayerId, double> contributed;
        for (int k = 1; k <= n; ++k) contributed[PlayerId{k}] = 0.0;
        double pool = 0.0;

        for (int r = 1; r <= setting_.rounds(); ++r) {
            ++turn_;
            note(Visibility::pub(), "Round " + std::to_string(r) +
                                        ": decide your contribution. You must answer with the "
                                        "template 'I contribute xx'.");
            double round_pool = 0.0;
            for (int k = 1; k <= n; ++k) {
                PlayerId p{k};
                double budget_left = topic.initial_balance - contributed[p];
                auto validator = [&](const Action& a) {
                    if (std::get<ContributionAction>(a).amount > budget_left + 1e-9)
                        throw Error(Errc::Overdraft,
                                    player_name(p) + " has only " + format_number(budget_left) +
                                        " points left");
                };
                Action a = decide(p, StageKind::Contribution,
                                  player_name(p) + ", decide your contribution for this round. "
                                                   "You have " +
                                      format_number(budget_left) +
                                      " points left to invest. You must answer with the template "
                                      "'I contribute xx'.",
                                  json{{"round", r}, {"budget_left", budget_left}},
                                  Visibility::priv({p}), true, validator);
                double amount = std::get<ContributionAction>(a).amount;
                contributed[p] += amount;
                round_pool += amount;
            }
            pool += round_pool;
            note(Visibility::pub(), "Round " + std::to_string(r) + ": the communal pool received " +
                                        format_number(round_pool) + " points.");
        }

        // Single settlement over the summed contributions; arithmetic matches
        // per-round settling since the multiplier is constant.
        const double payback = topic.multiplier * pool / n;
        std::map<PlayerId, double> finals;
        std::ostringstream fin;
        fin << "Final settlement: the pool of " << format_number(pool) << " points times "
            << format_number(topic.multiplier) << " pays " << format_number(payback)
            << " to each player. Final points:";
        for (int k = 1; k <= n; ++k) {
            PlayerId p{k};
            finals[p] = topic.initial_balance - contributed[p] + payback;
            fin << " " << player_name(p) << ": " << format_number(finals[p]) << ".";
        }
        note(Visibility::pub(), fin.str());

        Outcome outcome;
        outcome.scenario = Scenario::PublicGood;
        outcome.per_player_scores = finals;
        outcome.winners = theory::theory_winners(finals);
        transcript_.set_outcome(outcome);
    }

    const ValidatedSetting& setting_;
    std::map<PlayerId, std::shared_ptr<agents::Agent>> players_;
    uint64_t seed_;
    const TemplateSet& templates_;
    std::string game_id_;
    Transcript transcript_;
    int turn_ = 0;
    int seq_ = 0;
};

} // namespace

GameResult run_competition(const ValidatedSetting& setting,
                           const std::map<PlayerId, std::shared_ptr<agents::Agent>>& players,
                           uint64_t seed, const TemplateSet& templates) {
    GameRunner runner(setting, players, seed, templates);
    return runner.run();
}

// ── Persistence ──────────────────────────────────────────────────────

std::string logical_timestamp(int seq) {
    // Fixed epoch keeps replayed transcripts byte-identical across runs.
    constexpr std::time_t kEpoch = 1704067200; // 2024-01-01T00:00:00Z
    std::time_t t = kEpoch + seq;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

void write_transcript(const Transcript& transcript, uint64_t seed, const std::string& dir) {
    if (!transcript.outcome())
        throw Error(Errc::IncompleteTranscript, transcript.game_id() + " has no outcome");
    const TopicSetting& s = transcript.setting().get();
    fs::path base = fs::path(dir) / scenario_name(s.scenario) / s.id;
    fs::create_directories(base);
    fs::path events_path = base / (std::to_string(seed) + ".jsonl");
    fs::path meta_path = base / (std::to_string(seed) + ".meta.json");

    {
        std::ofstream out(events_path, std::ios::binary);
        for (const GameEvent& e : transcript.events()) {
            json j = e;
            j["timestamp"] = logical_timestamp(e.seq);
            out << j.dump() << "\n";
        }
    }
    {
        json meta{{"schema", "magic-meta/1"},
                  {"game_id", transcript.game_id()},
                  {"seed", seed},
                  {"setting", s},
                  {"challenger_role", role_name(transcript.setting().challenger_role())},
                  {"outcome", *transcript.outcome()}};
        std::ofstream out(meta_path, std::ios::binary);
        out << meta.dump(2) << "\n";
    }
}

StoredGame read_transcript(const std::string& meta_path) {
    std::ifstream in(meta_path);
    if (!in) throw Error(Errc::IncompleteTranscript, "cannot open " + meta_path);
    json meta = json::parse(in);
    if (!meta.contains("outcome") || meta["outcome"].is_null())
        throw Error(Errc::IncompleteTranscript, meta_path + " has no outcome");

    StoredGame game;
    game.seed = meta.at("seed").get<uint64_t>();
    ValidatedSetting setting = validate_topic_setting(meta.at("setting").get<TopicSetting>());
    game.transcript = Transcript(meta.at("game_id").get<std::string>(), setting);

    fs::path events_path = meta_path;
    events_path.replace_extension();  // strip .json
    events_path.replace_extension(".jsonl"); // strip .meta, add .jsonl
    std::ifstream events(events_path);
    if (!events)
        throw Error(Errc::IncompleteTranscript, "missing events file " + events_path.string());
    std::string line;
    while (std::getline(events, line)) {
        if (line.empty()) continue;
        GameEvent e = json::parse(line).get<GameEvent>();
        game.transcript.append(std::move(e));
    }
    game.transcript.set_outcome(meta.at("outcome").get<Outcome>());
    return game;
}

std::vector<StoredGame> read_transcript_dir(const std::string& dir) {
    if (!fs::exists(dir)) throw Error(Errc::IncompleteTranscript, "no such directory " + dir);
    std::vector<std::string> meta_files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() > 10 && name.substr(name.size() - 10) == ".meta.json")
            meta_files.push_back(entry.path().string());
    }
    std::sort(meta_files.begin(), meta_files.end());
    std::vector<StoredGame> out;
    out.reserve(meta_files.size());
    for (const std::string& path : meta_files) out.push_back(read_transcript(path));
    return out;
}

} // namespace magic::engine
