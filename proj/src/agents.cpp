#include "magic/agents.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace magic::agents {

namespace {

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

bool contains_word(const std::string& text, const std::string& word) {
    std::regex re("\\b" + word + "\\b", std::regex::icase);
    return std::regex_search(text, re);
}

const std::regex kPlayerMention(R"(player\s*#?\s*(\d+))", std::regex::icase);
const std::regex kContribution(R"(contribut\w*\s*(?:of|:|is|=)?\s*\$?(-?\d+(?:\.\d+)?))",
                               std::regex::icase);

std::vector<int> player_mentions(const std::string& raw) {
    std::vector<int> out;
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), kPlayerMention);
         it != std::sregex_iterator(); ++it)
        out.push_back(std::stoi((*it)[1].str()));
    return out;
}

PlayerId parse_vote_target(const std::string& raw, const ParseContext& ctx) {
    std::set<int> distinct;
    for (int idx : player_mentions(raw)) {
        if (idx < 1 || idx > ctx.players)
            throw Error(Errc::UnknownTarget, "Player " + std::to_string(idx));
        distinct.insert(idx);
    }
    if (distinct.empty()) throw Error(Errc::NoMatch, "no 'Player x' in reply");
    if (distinct.size() > 1) throw Error(Errc::Ambiguous, "several players named");
    PlayerId target{*distinct.begin()};
    if (target == ctx.self && !ctx.allow_self_vote)
        throw Error(Errc::SelfVote, player_name(ctx.self));
    return target;
}

} // namespace

// ── parse / render / default ─────────────────────────────────────────

Action parse_action(const std::string& raw, StageKind stage, const ParseContext& ctx) {
    switch (stage) {
    case StageKind::Clue: {
        std::string text = trim(raw);
        if (text.empty()) throw Error(Errc::NoMatch, "empty clue");
        return ClueAction{std::move(text)};
    }
    case StageKind::Accusation: return VoteAction{parse_vote_target(raw, ctx)};
    case StageKind::Vote: {
        ParseContext vote_ctx = ctx;
        vote_ctx.allow_self_vote = true;
        return ProposalVoteAction{parse_vote_target(raw, vote_ctx)};
    }
    case StageKind::Guess: {
        static const std::regex re(
            R"(guess\w*\s*(?:the\s+)?(?:secret\s+)?(?:word\b|code\b)?\s*(?:is\b)?\s*[:\-]?\s*(.+))",
            std::regex::icase);
        std::string word;
        std::smatch m;
        std::string rest = raw;
        while (std::regex_search(rest, m, re)) { // keep the last occurrence
            word = m[1].str();
            rest = m.suffix().str();
        }
        if (word.empty()) word = raw;
        word = trim(word);
        while (!word.empty() && (word.back() == '.' || word.back() == '!' || word.back() == '"' ||
                                 word.back() == '\''))
            word.pop_back();
        while (!word.empty() && (word.front() == '"' || word.front() == '\'')) word.erase(0, 1);
        if (word.empty()) throw Error(Errc::NoMatch, "empty guess");
        return GuessAction{word};
    }
    case StageKind::Choice: {
        std::string text = lower(raw);
        bool coop = contains(text, "cooperat");
        bool defect = contains(text, "defect") || contains(text, "betray");
        if (coop && defect) throw Error(Errc::Ambiguous, "both keywords present");
        if (!coop && !defect) throw Error(Errc::NoMatch, "reply with 'defect' or 'cooperate'");
        return ChoiceAction{coop};
    }
    case StageKind::Contribution: {
        std::set<std::string> distinct;
        for (auto it = std::sregex_iterator(raw.begin(), raw.end(), kContribution);
             it != std::sregex_iterator(); ++it)
            distinct.insert((*it)[1].str());
        if (distinct.empty()) throw Error(Errc::NoMatch, "use the template 'I contribute xx'");
        if (distinct.size() > 1) throw Error(Errc::Ambiguous, "several amounts named");
        double amount = std::stod(*distinct.begin());
        if (amount < 0) throw Error(Errc::NegativeAmount, *distinct.begin());
        return ContributionAction{amount};
    }
    case StageKind::Proposal: {
        ProposalAction proposal;
        for (int k = 1; k <= ctx.players; ++k) {
            // (?!\d) keeps "Player 1" from matching inside "Player 10"
            std::regex re("player\\s*#?\\s*" + std::to_string(k) +
                              R"((?!\d)\s*(?::|=|-|pays|should pay|will pay)?\s*\$?(\d+(?:\.\d+)?))",
                          std::regex::icase);
            std::set<std::string> amounts;
            for (auto it = std::sregex_iterator(raw.begin(), raw.end(), re);
                 it != std::sregex_iterator(); ++it)
                amounts.insert((*it)[1].str());
            if (amounts.empty())
                throw Error(Errc::NoMatch, "no share for Player " + std::to_string(k));
            if (amounts.size() > 1)
                throw Error(Errc::Ambiguous, "several shares for Player " + std::to_string(k));
            double x = std::stod(*amounts.begin());
            if (x < 0) throw Error(Errc::NegativeAmount, *amounts.begin());
            proposal.shares[PlayerId{k}] = x;
        }
        return proposal;
    }
    case StageKind::RoleProbe: {
        bool yes = contains_word(raw, "yes");
        bool no = contains_word(raw, "no");
        if (!yes && !no) {
            std::string text = lower(raw);
            if (contains(text, "am not the undercover") || contains(text, "not the undercover") ||
                contains(text, "am not undercover") || contains(text, "i am a civilian"))
                no = true;
            else if (contains(text, "am the undercover") || contains(text, "i am undercover") ||
                     contains(text, "think i am the undercover"))
                yes = true;
        }
        if (yes && no) throw Error(Errc::Ambiguous, "both yes and no present");
        if (!yes && !no) throw Error(Errc::NoMatch, "reply with 'yes' or 'no'");
        return RoleClaimAction{yes};
    }
    default: throw Error(Errc::NoMatch, "stage has no action format");
    }
}

std::string render_action(const Action& action) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClueAction>) return a.text;
            if constexpr (std::is_same_v<T, VoteAction>) return player_name(a.target);
            if constexpr (std::is_same_v<T, GuessAction>) return "I guess " + a.word;
            if constexpr (std::is_same_v<T, ChoiceAction>)
                return a.cooperate ? "cooperate" : "defect";
            if constexpr (std::is_same_v<T, ContributionAction>)
                return "I contribute " + format_number(a.amount);
            if constexpr (std::is_same_v<T, ProposalAction>) {
                std::string out;
                for (const auto& [p, x] : a.shares) {
                    if (!out.empty()) out += ", ";
                    out += player_name(p) + ": " + format_number(x);
                }
                return out;
            }
            if constexpr (std::is_same_v<T, ProposalVoteAction>) return player_name(a.proposer);
            if constexpr (std::is_same_v<T, RoleClaimAction>) return a.is_special ? "yes" : "no";
        },
        action);
}

namespace {

ProposalAction equal_split(double total_fee, int players) {
    ProposalAction p;
    double each = std::round(total_fee / players * 100.0) / 100.0;
    double assigned = 0.0;
    for (int k = 1; k < players; ++k) {
        p.shares[PlayerId{k}] = each;
        assigned += each;
    }
    p.shares[PlayerId{players}] = std::round((total_fee - assigned) * 100.0) / 100.0;
    return p;
}

} // namespace

Action default_action(StageKind stage, const ParseContext& ctx) {
    switch (stage) {
    case StageKind::Choice: return ChoiceAction{true};
    case StageKind::Contribution: return ContributionAction{0.0};
    case StageKind::Accusation: {
        for (int k = 1; k <= ctx.players; ++k)
            if (k != ctx.self.index) return VoteAction{PlayerId{k}};
        throw Error(Errc::InvalidField, "no other player to vote for");
    }
    case StageKind::Vote: return ProposalVoteAction{ctx.self};
    case StageKind::Proposal: return equal_split(ctx.total_fee, ctx.players);
    case StageKind::Guess: return GuessAction{"unknown"};
    case StageKind::Clue: return ClueAction{"I have nothing more to add"};
    case StageKind::RoleProbe: return RoleClaimAction{false};
    default: throw Error(Errc::InvalidField, "stage has no default action");
    }
}

// ── Beliefs ──────────────────────────────────────────────────────────

const PerspectiveBeliefs& Beliefs::of(PlayerId p) const {
    for (const PerspectiveBeliefs& persp : perspectives)
        if (persp.perspective == p) return persp;
    throw Error(Errc::UnknownViewer, player_name(p));
}

std::optional<PlayerId> Beliefs::top_suspect() const {
    std::map<PlayerId, int> counts;
    for (const BeliefEntry& e : first_hop())
        if (e.label == "suspect") counts[e.target] += 1;
    std::optional<PlayerId> best;
    int best_count = 0;
    for (const auto& [p, n] : counts)
        if (n > best_count) { // ties resolve to the lowest index
            best = p;
            best_count = n;
        }
    return best;
}

namespace {

std::string classify_belief(const std::string& phrase) {
    std::string p = lower(phrase);
    if (contains(p, "suspicious") || contains(p, "suspect"))
        return (contains(p, "less") || contains(p, "not ")) ? "clear" : "suspect";
    if (contains(p, "undercover") || contains(p, "chameleon"))
        return contains(p, "not ") ? "clear" : "suspect";
    if (contains(p, "innocent") || contains(p, "a civilian")) return "clear";
    if (contains(p, "defect") || contains(p, "betray"))
        return contains(p, "not ") ? "cooperate" : "defect";
    if (contains(p, "cooperat")) return contains(p, "not ") ? "defect" : "cooperate";
    if (contains(p, "reduce") || contains(p, "decrease") || contains(p, "lower")) return "reduce";
    if (contains(p, "increase") || contains(p, "raise") || contains(p, "more")) return "increase";
    return "other";
}

} // namespace

Beliefs parse_beliefs(const std::string& raw, PlayerId owner, int players) {
    Beliefs beliefs{owner, raw, {}, std::nullopt};
    beliefs.perspectives.resize(static_cast<size_t>(players));
    for (int k = 1; k <= players; ++k)
        beliefs.perspectives[static_cast<size_t>(k - 1)].perspective = PlayerId{k};

    static const std::regex switch_re(R"(i think\s+(?:now\s+)?player\s*(\d+)(?:'s)?\s+think)",
                                      std::regex::icase);
    static const std::regex entry_re(
        R"(player\s*(\d+)\s+(?:is|will|may be|might be|seems|looks)\s+([^.\n;]*))",
        std::regex::icase);

    // Perspective switches partition the text; the leading segment is the
    // owner's own (first-hop) analysis.
    struct Segment {
        PlayerId perspective;
        size_t begin, end;
    };
    std::vector<Segment> segments;
    segments.push_back({owner, 0, raw.size()});
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), switch_re);
         it != std::sregex_iterator(); ++it) {
        int idx = std::stoi((*it)[1].str());
        size_t at = static_cast<size_t>(it->position(0));
        segments.back().end = at;
        if (idx >= 1 && idx <= players)
            segments.push_back(
                {PlayerId{idx}, at + static_cast<size_t>(it->length(0)), raw.size()});
        else // unknown perspective: parse but attribute to nobody
            segments.push_back({PlayerId{0}, at + static_cast<size_t>(it->length(0)), raw.size()});
    }

    for (const Segment& seg : segments) {
        if (seg.perspective.index < 1) continue;
        std::string text = raw.substr(seg.begin, seg.end - seg.begin);
        for (auto it = std::sregex_iterator(text.begin(), text.end(), entry_re);
             it != std::sregex_iterator(); ++it) {
            int idx = std::stoi((*it)[1].str());
            if (idx < 1 || idx > players) continue; // nonexistent player: drop the entry
            std::string phrase = (*it)[2].str();
            std::string label = classify_belief(phrase);
            std::string rationale;
            size_t because = lower(phrase).find("because");
            if (because != std::string::npos) {
                rationale = trim(phrase.substr(because + 7));
                phrase = trim(phrase.substr(0, because));
            }
            if (label == "other") continue;
            for (PerspectiveBeliefs& persp : beliefs.perspectives)
                if (persp.perspective == seg.perspective)
                    persp.entries.push_back({PlayerId{idx}, label, rationale});
        }
    }
    return beliefs;
}

std::optional<bool> parse_role_claim(const std::string& raw) {
    try {
        return std::get<RoleClaimAction>(parse_action(raw, StageKind::RoleProbe, {})).is_special;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// ── ScriptedAgent ────────────────────────────────────────────────────

ScriptedAgent::ScriptedAgent(std::string strategy, json params, uint64_t seed)
    : strategy_(std::move(strategy)), params_(preset(strategy_)), seed_(seed) {
    if (params.is_object())
        for (const auto& [k, v] : params.items()) params_[k] = v;
}

json ScriptedAgent::preset(const std::string& strategy) {
    json base{{"choice", "cooperate"},     {"contribution", 10.0}, {"proposal", "equal"},
              {"proposal_vote", "lowest"}, {"vote", "lowest"},     {"claim", "no"}};
    if (strategy == "baseline") {
        base["choice"] = "tit_for_tat";
        return base;
    }
    if (strategy == "always_cooperate") {
        base["contribution"] = 20.0;
        return base;
    }
    if (strategy == "always_defect") {
        base["choice"] = "defect";
        base["contribution"] = 0.0;
        base["proposal_vote"] = "own";
        return base;
    }
    if (strategy == "tit_for_tat") {
        base["choice"] = "tit_for_tat";
        return base;
    }
    if (strategy == "zero_contributor") {
        base["contribution"] = 0.0;
        return base;
    }
    if (strategy == "fixed_contributor") {
        base["contribution"] = 15.0;
        return base;
    }
    if (strategy == "proportional_proposer") {
        base["proposal"] = "proportional";
        base["proposal_vote"] = "own";
        return base;
    }
    if (strategy == "fixed_clue") return base;
    throw Error(Errc::ConfigError, "unknown scripted strategy '" + strategy + "'");
}

std::string ScriptedAgent::act(const std::vector<GameEvent>& view, const Directive& directive) {
    const int players = brief_.players;
    switch (directive.stage) {
    case StageKind::Clue: {
        int own = 0;
        for (const GameEvent& e : view)
            if (e.stage == StageKind::Clue && e.actor == id()) ++own;
        if (params_.contains("clues") && params_["clues"].is_array() &&
            !params_["clues"].empty()) {
            const json& clues = params_["clues"];
            size_t idx = std::min(static_cast<size_t>(own), clues.size() - 1);
            return render_action(ClueAction{clues[idx].get<std::string>()});
        }
        return render_action(ClueAction{"my hint " + std::to_string(own + 1)});
    }
    case StageKind::Accusation: {
        const std::string mode = params_.value("vote", "lowest");
        if (mode == "fixed") return render_action(VoteAction{PlayerId{params_.value("vote_target", 1)}});
        if (mode == "highest") {
            for (int k = players; k >= 1; --k)
                if (k != id().index) return render_action(VoteAction{PlayerId{k}});
        }
        for (int k = 1; k <= players; ++k)
            if (k != id().index) return render_action(VoteAction{PlayerId{k}});
        throw Error(Errc::InvalidField, "no other player");
    }
    case StageKind::Guess: return render_action(GuessAction{params_.value("guess", "unknown")});
    case StageKind::Choice: {
        std::string choice = params_.value("choice", "cooperate");
        if (choice == "tit_for_tat") {
            // Defect when a majority of the others defected last round.
            static const std::regex re(R"(Player (\d+) chose (defect|cooperate))");
            std::string last_results;
            for (const GameEvent& e : view)
                if (e.stage == StageKind::ModeratorNote && contains(e.raw_text, "chose"))
                    last_results = e.raw_text;
            int defectors = 0, others = 0;
            for (auto it = std::sregex_iterator(last_results.begin(), last_results.end(), re);
                 it != std::sregex_iterator(); ++it) {
                if (std::stoi((*it)[1].str()) == id().index) continue;
                ++others;
                if ((*it)[2].str() == "defect") ++defectors;
            }
            choice = (others > 0 && 2 * defectors > others) ? "defect" : "cooperate";
        }
        return render_action(ChoiceAction{choice == "cooperate"});
    }
    case StageKind::Contribution: {
        double amount = params_.value("contribution", 0.0);
        double budget = directive.extra.value("budget_left", amount);
        return render_action(ContributionAction{std::max(0.0, std::min(amount, budget))});
    }
    case StageKind::Proposal: {
        double fee = directive.extra.value("total_fee", 0.0);
        if (params_.value("proposal", "equal") == "proportional" &&
            directive.extra.contains("standalone_costs")) {
            auto costs = directive.extra["standalone_costs"].get<std::vector<double>>();
            double total = 0.0;
            for (double c : costs) total += c;
            ProposalAction p;
            double assigned = 0.0;
            for (int k = 1; k < players; ++k) {
                double share = std::round(fee * costs[static_cast<size_t>(k - 1)] / total * 100.0) / 100.0;
                p.shares[PlayerId{k}] = share;
                assigned += share;
            }
            p.shares[PlayerId{players}] = std::round((fee - assigned) * 100.0) / 100.0;
            return render_action(p);
        }
        return render_action(equal_split(fee, players));
    }
    case StageKind::Vote: {
        const std::string mode = params_.value("proposal_vote", "lowest");
        if (mode == "own") return render_action(ProposalVoteAction{id()});
        if (mode == "fixed")
            return render_action(ProposalVoteAction{PlayerId{params_.value("vote_target", 1)}});
        return render_action(ProposalVoteAction{PlayerId{1}});
    }
    case StageKind::RoleProbe:
        return render_action(RoleClaimAction{params_.value("claim", "no") == "yes"});
    default: return "ok";
    }
}

// ── RemoteAgent ──────────────────────────────────────────────────────

std::string render_dialogue(const std::vector<GameEvent>& view, PlayerId self) {
    if (view.empty()) return "(no messages yet)";
    std::ostringstream out;
    bool first = true;
    for (const GameEvent& e : view) {
        if (!first) out << "\n";
        first = false;
        if (!e.actor)
            out << "Moderator: ";
        else if (*e.actor == self)
            out << (e.stage == StageKind::PgmAnalysis
                        ? "Your private analysis: "
                        : e.stage == StageKind::RoleProbe ? "Your private answer: "
                                                          : "You (" + player_name(self) + "): ");
        else
            out << player_name(*e.actor) << ": ";
        out << e.raw_text;
    }
    return out.str();
}

RemoteAgent::RemoteAgent(std::string model, gateway::Gateway* gw, gateway::Mode mode,
                         const TemplateSet* templates)
    : model_(std::move(model)), gateway_(gw), mode_(mode), templates_(templates) {}

std::string RemoteAgent::chat_once(const std::vector<GameEvent>& view,
                                   const std::string& directive) {
    std::string system = templates_->render(scenario_name(brief_.scenario), "any", "global",
                                            brief_.vars) +
                         "\nYou are " + player_name(id()) + ".";
    std::string user = render_dialogue(view, id()) + "\n\n" + directive;
    gateway::ChatRequest request{model_, {{"system", system}, {"user", user}}, 0.0, 1024};
    return gateway_->chat(request, mode_);
}

std::string RemoteAgent::act(const std::vector<GameEvent>& view, const Directive& directive) {
    return chat_once(view, directive.text);
}

// ── PGM construction and inference ───────────────────────────────────

Beliefs pgm_construct(Agent& agent, const std::vector<GameEvent>& view,
                      const std::string& role_key) {
    auto* remote = dynamic_cast<RemoteAgent*>(&agent);
    if (!remote) throw Error(Errc::InvalidField, "pgm_construct needs a remote agent");
    const GameBrief& brief = agent.brief();
    const std::string scenario = scenario_name(brief.scenario);
    const TemplateSet& templates = remote->templates();

    if (role_key == "undercover_unknown") {
        // Two steps: self-assessment, then the branch-specific analysis.
        std::string probe = templates.render(scenario, "any", "probe", brief.vars);
        std::string claim_text = agent.act(view, {StageKind::PgmAnalysis, probe, {}});
        std::optional<bool> claim = parse_role_claim(claim_text);
        std::string branch = claim.value_or(false) ? "undercover" : "civilian";
        std::string prompt = templates.render(scenario, branch, "pgm", brief.vars);
        std::string analysis = agent.act(view, {StageKind::PgmAnalysis, prompt, {}});
        std::string raw = "Self-assessment: " + claim_text + "\n" + analysis;
        Beliefs beliefs = parse_beliefs(raw, agent.id(), brief.players);
        beliefs.self_claim = claim;
        return beliefs;
    }

    const std::string role = role_key == "theory" ? "any" : role_key;
    std::string prompt = templates.render(scenario, role, "pgm", brief.vars);
    std::string raw = agent.act(view, {StageKind::PgmAnalysis, prompt, {}});
    return parse_beliefs(raw, agent.id(), brief.players);
}

std::string pgm_decide(Agent& agent, const std::vector<GameEvent>& view, const Beliefs& beliefs,
                       const Directive& decision_directive) {
    Directive conditioned = decision_directive;
    conditioned.text = "Your analysis of the current situation:\n" + beliefs.raw_text + "\n\n" +
                       decision_directive.text;
    return agent.act(view, conditioned);
}

// ── Agent specs ──────────────────────────────────────────────────────

AgentSpec AgentSpec::parse(const std::string& text, bool pgm) {
    AgentSpec spec;
    if (text.rfind("scripted:", 0) == 0) {
        if (pgm) throw Error(Errc::ConfigError, "--pgm requires a remote challenger model");
        spec.kind = Scripted;
        spec.name = text.substr(9);
        ScriptedAgent::preset(spec.name); // validates the strategy name
    } else {
        spec.kind = pgm ? PgmRemote : Remote;
        spec.name = text;
    }
    return spec;
}

std::string AgentSpec::describe() const {
    switch (kind) {
    case Scripted: return "scripted:" + name;
    case Remote: return "remote:" + name;
    case PgmRemote: return "pgm:" + name;
    }
    return name;
}

std::shared_ptr<Agent> make_agent(const AgentSpec& spec, uint64_t seed, gateway::Gateway* gw,
                                  gateway::Mode mode, const TemplateSet* templates) {
    switch (spec.kind) {
    case AgentSpec::Scripted: return std::make_shared<ScriptedAgent>(spec.name, spec.params, seed);
    case AgentSpec::Remote: return std::make_shared<RemoteAgent>(spec.name, gw, mode, templates);
    case AgentSpec::PgmRemote:
        return std::make_shared<PgmRemoteAgent>(spec.name, gw, mode, templates);
    }
    throw Error(Errc::ConfigError, "bad agent spec");
}

} // namespace magic::agents
