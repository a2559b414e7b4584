#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "magic/core.hpp"
#include "magic/gateway.hpp"
#include "magic/templates.hpp"

namespace magic::agents {

// ── Action text formats ──────────────────────────────────────────────

struct ParseContext {
    PlayerId self;
    int players = 3;
    bool allow_self_vote = false; // proposal votes may name the voter
    double total_fee = 0.0;       // for proposal defaults
};

// Stage-specific extraction from raw model text. Throws Ambiguous, NoMatch,
// SelfVote, UnknownTarget or NegativeAmount; the engine re-prompts on these
// and falls back to default_action after the retry budget.
Action parse_action(const std::string& raw, StageKind stage, const ParseContext& ctx);

// Canonical text for an action; parse_action(render_action(a)) == a for
// every action the scripted agents emit.
std::string render_action(const Action& action);

// Deterministic fallback: Choice=Cooperate, Contribution=0, accusation
// Vote=lowest-index other player, ProposalVote=own proposal, Proposal=
// equal split, Guess/Clue=fixed strings, RoleClaim=no.
Action default_action(StageKind stage, const ParseContext& ctx);

// ── Two-hop beliefs ──────────────────────────────────────────────────

struct BeliefEntry {
    PlayerId target;
    std::string label; // suspect | clear | defect | cooperate | reduce | increase | other
    std::string rationale;

    bool operator==(const BeliefEntry&) const = default;
};

struct PerspectiveBeliefs {
    PlayerId perspective;
    std::vector<BeliefEntry> entries;
};

// Parsed two-hop analysis for one decision point: the owner's view of every
// player's suspicions, exactly N perspectives (owner's own = first hop).
struct Beliefs {
    PlayerId owner;
    std::string raw_text;
    std::vector<PerspectiveBeliefs> perspectives;
    std::optional<bool> self_claim; // undercover self-assessment, when probed

    const PerspectiveBeliefs& of(PlayerId p) const;
    const std::vector<BeliefEntry>& first_hop() const { return of(owner).entries; }
    // Most-named suspect in the owner's first hop, if any.
    std::optional<PlayerId> top_suspect() const;
};

// Extracts "I think Player x is ..." first-hop statements and
// "I think Player y thinks: ..." second-hop sections. Statements naming
// players outside 1..players are dropped; an analysis from which nothing
// parses yields empty entry lists (callers treat that as incorrect).
Beliefs parse_beliefs(const std::string& raw, PlayerId owner, int players);

std::optional<bool> parse_role_claim(const std::string& raw);

// ── Agents ───────────────────────────────────────────────────────────

struct Directive {
    StageKind stage = StageKind::ModeratorNote;
    std::string text;
    json extra; // structured context for scripted agents (round, word, budget…)
};

// Per-game binding; an agent instance is bound to one game.
struct GameBrief {
    Scenario scenario = Scenario::Chameleon;
    int players = 3;
    int rounds = 1;
    PlayerId self;
    std::map<std::string, std::string> vars; // template variables for this seat
};

class Agent {
public:
    virtual ~Agent() = default;

    PlayerId id() const { return brief_.self; }
    const GameBrief& brief() const { return brief_; }
    virtual void bind(GameBrief brief) { brief_ = std::move(brief); }

    // Returns the model/script response verbatim.
    virtual std::string act(const std::vector<GameEvent>& view, const Directive& directive) = 0;

    virtual bool is_pgm() const { return false; }
    virtual std::string describe() const = 0;

protected:
    GameBrief brief_;
};

// Deterministic strategy agent: a pure function of (view, seed, params).
class ScriptedAgent : public Agent {
public:
    ScriptedAgent(std::string strategy, json params, uint64_t seed);

    std::string act(const std::vector<GameEvent>& view, const Directive& directive) override;
    std::string describe() const override { return "scripted:" + strategy_; }

    static json preset(const std::string& strategy);

private:
    std::string strategy_;
    json params_;
    uint64_t seed_;
};

// Chat-model agent; prompts built from the template assets and the
// visibility-filtered view.
class RemoteAgent : public Agent {
public:
    RemoteAgent(std::string model, gateway::Gateway* gw, gateway::Mode mode,
                const TemplateSet* templates);

    std::string act(const std::vector<GameEvent>& view, const Directive& directive) override;
    std::string describe() const override { return "remote:" + model_; }

    const std::string& model() const { return model_; }
    const TemplateSet& templates() const { return *templates_; }

protected:
    std::string chat_once(const std::vector<GameEvent>& view, const std::string& directive);

    std::string model_;
    gateway::Gateway* gateway_;
    gateway::Mode mode_;
    const TemplateSet* templates_;
};

// RemoteAgent that builds a two-hop analysis before every decision.
class PgmRemoteAgent : public RemoteAgent {
public:
    using RemoteAgent::RemoteAgent;

    bool is_pgm() const override { return true; }
    std::string describe() const override { return "pgm:" + model_; }
};

// The dialogue a player sees, rendered for prompting.
std::string render_dialogue(const std::vector<GameEvent>& view, PlayerId self);

// Issues the role-specific analysis prompt(s) and parses the result into
// Beliefs; records nothing (the engine appends the PgmAnalysis event).
// `role_key` is chameleon|non_chameleon|undercover_unknown|theory.
Beliefs pgm_construct(Agent& agent, const std::vector<GameEvent>& view,
                      const std::string& role_key);

// Issues the decision prompt conditioned on the serialized beliefs.
std::string pgm_decide(Agent& agent, const std::vector<GameEvent>& view, const Beliefs& beliefs,
                       const Directive& decision_directive);

// ── Agent specs (CLI / tournament configuration) ─────────────────────

struct AgentSpec {
    enum Kind { Scripted, Remote, PgmRemote } kind = Scripted;
    std::string name = "baseline"; // strategy or model id
    json params;                   // scripted parameter overrides

    static AgentSpec parse(const std::string& text, bool pgm);
    std::string describe() const;
};

std::shared_ptr<Agent> make_agent(const AgentSpec& spec, uint64_t seed, gateway::Gateway* gw,
                                  gateway::Mode mode, const TemplateSet* templates);

} // namespace magic::agents
