#include "magic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magic/agents.hpp"
#include "magic/games_social.hpp"

namespace magic::metrics {

MetricCounts& MetricCounts::operator+=(const MetricCounts& other) {
    n_cv += other.n_cv;
    n_v += other.n_v;
    n_c_gold += other.n_c_gold;
    n_gold += other.n_gold;
    n_c_inter += other.n_c_inter;
    n_inter += other.n_inter;
    n_wuc += other.n_wuc;
    n_uc += other.n_uc;
    n_wcg += other.n_wcg;
    n_cg += other.n_cg;
    n_cr += other.n_cr;
    n_rt += other.n_rt;
    n_wcs += other.n_wcs;
    n_cs += other.n_cs;
    n_pcs += other.n_pcs;
    n_b += other.n_b;
    n_pd += other.n_pd;
    n_li += other.n_li;
    n_pg += other.n_pg;
    auto cat = [](std::vector<int>& a, const std::vector<int>& b) {
        a.insert(a.end(), b.begin(), b.end());
    };
    cat(chameleon_outcomes, other.chameleon_outcomes);
    cat(non_chameleon_outcomes, other.non_chameleon_outcomes);
    cat(undercover_outcomes, other.undercover_outcomes);
    cat(civilian_outcomes, other.civilian_outcomes);
    pd_wins += other.pd_wins;
    pg_wins += other.pg_wins;
    return *this;
}

void to_json(json& j, const MetricCounts& c) {
    j = json{{"n_cv", c.n_cv},       {"n_v", c.n_v},
             {"n_c_gold", c.n_c_gold}, {"n_gold", c.n_gold},
             {"n_c_inter", c.n_c_inter}, {"n_inter", c.n_inter},
             {"n_wuc", c.n_wuc},     {"n_uc", c.n_uc},
             {"n_wcg", c.n_wcg},     {"n_cg", c.n_cg},
             {"n_cr", c.n_cr},       {"n_rt", c.n_rt},
             {"n_wcs", c.n_wcs},     {"n_cs", c.n_cs},
             {"n_pcs", c.n_pcs},     {"n_b", c.n_b},
             {"n_pd", c.n_pd},       {"n_li", c.n_li},
             {"n_pg", c.n_pg},       {"chameleon_outcomes", c.chameleon_outcomes},
             {"non_chameleon_outcomes", c.non_chameleon_outcomes},
             {"undercover_outcomes", c.undercover_outcomes},
             {"civilian_outcomes", c.civilian_outcomes},
             {"pd_wins", c.pd_wins}, {"pg_wins", c.pg_wins}};
}

void from_json(const json& j, MetricCounts& c) {
    c.n_cv = j.at("n_cv").get<long>();
    c.n_v = j.at("n_v").get<long>();
    c.n_c_gold = j.at("n_c_gold").get<long>();
    c.n_gold = j.at("n_gold").get<long>();
    c.n_c_inter = j.at("n_c_inter").get<long>();
    c.n_inter = j.at("n_inter").get<long>();
    c.n_wuc = j.at("n_wuc").get<long>();
    c.n_uc = j.at("n_uc").get<long>();
    c.n_wcg = j.at("n_wcg").get<long>();
    c.n_cg = j.at("n_cg").get<long>();
    c.n_cr = j.at("n_cr").get<long>();
    c.n_rt = j.at("n_rt").get<long>();
    c.n_wcs = j.at("n_wcs").get<long>();
    c.n_cs = j.at("n_cs").get<long>();
    c.n_pcs = j.at("n_pcs").get<long>();
    c.n_b = j.at("n_b").get<long>();
    c.n_pd = j.at("n_pd").get<long>();
    c.n_li = j.at("n_li").get<long>();
    c.n_pg = j.at("n_pg").get<long>();
    c.chameleon_outcomes = j.at("chameleon_outcomes").get<std::vector<int>>();
    c.non_chameleon_outcomes = j.at("non_chameleon_outcomes").get<std::vector<int>>();
    c.undercover_outcomes = j.at("undercover_outcomes").get<std::vector<int>>();
    c.civilian_outcomes = j.at("civilian_outcomes").get<std::vector<int>>();
    c.pd_wins = j.at("pd_wins").get<long>();
    c.pg_wins = j.at("pg_wins").get<long>();
}

// ── Extraction ───────────────────────────────────────────────────────

namespace {

bool social_label(const std::string& label) { return label == "suspect" || label == "clear"; }

bool first_hop_correct(const agents::BeliefEntry& entry, PlayerId hidden) {
    if (entry.label == "suspect") return entry.target == hidden;
    return entry.target != hidden;
}

// Beliefs of every player per (actor, turn), for second-hop comparison.
struct AnalysisIndex {
    std::map<std::pair<int, int>, agents::Beliefs> by_actor_turn;

    const agents::Beliefs* find(PlayerId actor, int turn) const {
        auto it = by_actor_turn.find({actor.index, turn});
        return it == by_actor_turn.end() ? nullptr : &it->second;
    }
};

AnalysisIndex index_analyses(const Transcript& t) {
    AnalysisIndex index;
    int players = t.setting().players();
    for (const GameEvent& e : t.events())
        if (e.stage == StageKind::PgmAnalysis && e.actor)
            index.by_actor_turn.insert_or_assign(
                {e.actor->index, e.turn}, agents::parse_beliefs(e.raw_text, *e.actor, players));
    return index;
}

void extract_social(const Transcript& t, MetricCounts& c, const ExtractParams& params) {
    const ValidatedSetting& setting = t.setting();
    const Outcome& outcome = *t.outcome();
    const PlayerId challenger = setting.challenger();
    const PlayerId hidden = *setting.hidden_player();
    const RoleKind role = setting.challenger_role();
    const bool is_hidden_role = role == RoleKind::Chameleon || role == RoleKind::Undercover;

    switch (role) {
    case RoleKind::Chameleon: c.chameleon_outcomes.push_back(outcome.code); break;
    case RoleKind::NonChameleon: c.non_chameleon_outcomes.push_back(outcome.code); break;
    case RoleKind::Undercover: c.undercover_outcomes.push_back(outcome.code); break;
    case RoleKind::Civilian: c.civilian_outcomes.push_back(outcome.code); break;
    default: break;
    }

    // Judgement: votes cast while not the hidden player.
    if (!is_hidden_role) {
        for (const GameEvent& e : t.events()) {
            if (e.stage != StageKind::Accusation || e.actor != challenger) continue;
            if (!e.parsed_action) continue;
            ++c.n_v;
            if (std::get<VoteAction>(*e.parsed_action).target == hidden) ++c.n_cv;
        }
    }

    // Deception: hidden-role games won per the credit rule (positive
    // credit), plus the guess term when defending as non-chameleon.
    if (is_hidden_role) {
        ++c.n_uc;
        if (social::role_credit(setting.scenario(), role, outcome.code) > 0) ++c.n_wuc;
    } else if (setting.scenario() == Scenario::Chameleon) {
        if (outcome.code == 0 || outcome.code == 3) {
            ++c.n_cg;                       // the accused chameleon guessed
            if (outcome.code == 0) ++c.n_wcg; // and guessed wrong
        }
    }

    // Self-awareness: role probes answered by the challenger.
    for (const GameEvent& e : t.events()) {
        if (e.stage != StageKind::RoleProbe || e.actor != challenger) continue;
        ++c.n_rt;
        if (!e.parsed_action) continue; // unanswerable probe counts as incorrect
        bool claim = std::get<RoleClaimAction>(*e.parsed_action).is_special;
        if (claim == (challenger == hidden)) ++c.n_cr;
    }

    // Reasoning: the challenger's two-hop analyses.
    AnalysisIndex index;
    bool indexed = false;
    for (const GameEvent& e : t.events()) {
        if (e.stage != StageKind::PgmAnalysis || e.actor != challenger) continue;
        agents::Beliefs beliefs =
            agents::parse_beliefs(e.raw_text, challenger, setting.players());

        long scored = 0;
        for (const agents::BeliefEntry& entry : beliefs.first_hop()) {
            if (!social_label(entry.label)) continue;
            ++scored;
            ++c.n_gold;
            if (first_hop_correct(entry, hidden)) ++c.n_c_gold;
        }
        if (scored == 0 && params.unparseable_counts_incorrect)
            ++c.n_gold; // nothing parseable: one incorrect analysis

        if (!indexed) {
            index = index_analyses(t);
            indexed = true;
        }
        for (const agents::PerspectiveBeliefs& persp : beliefs.perspectives) {
            if (persp.perspective == challenger) continue;
            const agents::Beliefs* theirs = index.find(persp.perspective, e.turn);
            if (!theirs) continue; // target not instrumented: excluded
            for (const agents::BeliefEntry& entry : persp.entries) {
                if (!social_label(entry.label)) continue;
                const agents::BeliefEntry* match = nullptr;
                for (const agents::BeliefEntry& own : theirs->first_hop())
                    if (own.target == entry.target && social_label(own.label)) match = &own;
                if (!match) continue;
                ++c.n_inter;
                if (match->label == entry.label) ++c.n_c_inter;
            }
        }
    }
}

void extract_theory(const Transcript& t, MetricCounts& c) {
    const ValidatedSetting& setting = t.setting();
    const Outcome& outcome = *t.outcome();
    const PlayerId challenger = setting.challenger();

    switch (setting.scenario()) {
    case Scenario::CostSharing:
        ++c.n_cs;
        if (outcome.code == 1) {
            ++c.n_wcs;
            if (outcome.agreed_proposer == challenger) ++c.n_pcs;
        }
        break;
    case Scenario::PrisonersDilemma: {
        ++c.n_pd;
        if (outcome.winners.contains(challenger)) ++c.pd_wins;
        for (const GameEvent& e : t.events())
            if (e.stage == StageKind::Choice && e.actor == challenger && e.parsed_action &&
                !std::get<ChoiceAction>(*e.parsed_action).cooperate)
                ++c.n_b;
        break;
    }
    case Scenario::PublicGood: {
        ++c.n_pg;
        if (outcome.winners.contains(challenger)) ++c.pg_wins;
        std::map<int, std::map<PlayerId, double>> rounds;
        for (const GameEvent& e : t.events())
            if (e.stage == StageKind::Contribution && e.actor && e.parsed_action)
                rounds[e.turn][*e.actor] = std::get<ContributionAction>(*e.parsed_action).amount;
        for (const auto& [turn, contributions] : rounds) {
            auto mine = contributions.find(challenger);
            if (mine == contributions.end()) continue;
            bool strictly_least = true;
            for (const auto& [p, x] : contributions)
                if (p != challenger && x <= mine->second) strictly_least = false;
            if (strictly_least) ++c.n_li; // all-equal rounds count for no one
        }
        break;
    }
    default: break;
    }
}

MetricCounts extract_one(const Transcript& t, const ExtractParams& params) {
    MetricCounts c;
    if (!t.outcome())
        throw Error(Errc::IncompleteTranscript, t.game_id() + " has no outcome");
    if (t.outcome()->aborted) return c; // aborted games never contribute
    switch (t.setting().scenario()) {
    case Scenario::Chameleon:
    case Scenario::Undercover: extract_social(t, c, params); break;
    default: extract_theory(t, c); break;
    }
    return c;
}

} // namespace

MetricCounts extract_counts(std::span<const Transcript> transcripts,
                            const ExtractParams& params) {
    MetricCounts total;
    for (const Transcript& t : transcripts) total += extract_one(t, params);
    return total;
}

MetricCounts extract_counts_parallel(std::span<const Transcript> transcripts,
                                     const ExtractParams& params) {
    for (const Transcript& t : transcripts)
        if (!t.outcome())
            throw Error(Errc::IncompleteTranscript, t.game_id() + " has no outcome");

    const long n = static_cast<long>(transcripts.size());
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    const long chunks = std::min<long>(n, 8L * threads);
    if (chunks <= 1) return extract_counts(transcripts, params);

    std::vector<MetricCounts> partial(static_cast<size_t>(chunks));
#pragma omp parallel for schedule(dynamic)
    for (long c = 0; c < chunks; ++c) {
        long begin = c * n / chunks;
        long end = (c + 1) * n / chunks;
        MetricCounts local;
        for (long i = begin; i < end; ++i)
            local += extract_one(transcripts[static_cast<size_t>(i)], params);
        partial[static_cast<size_t>(c)] = std::move(local);
    }

    // Ordered fold over contiguous chunks keeps outcome lists in transcript
    // order, matching the serial reference exactly.
    MetricCounts total;
    for (const MetricCounts& p : partial) total += p;
    return total;
}

// ── Scores ───────────────────────────────────────────────────────────

double role_win_rate(const MetricCounts& counts, RoleKind role, const ScoreParams& params) {
    auto credit_rate = [&](const std::vector<int>& outcomes, double divisor_per_game) {
        if (outcomes.empty())
            throw Error(Errc::EmptyOutcomeList, std::string(role_name(role)) + " has no outcomes");
        double sum = 0.0;
        for (int code : outcomes) sum += social::role_credit(role_scenario(role), role, code);
        return sum / (divisor_per_game * static_cast<double>(outcomes.size()));
    };
    auto ratio = [&](long wins, long games) {
        if (games == 0)
            throw Error(Errc::EmptyOutcomeList, std::string(role_name(role)) + " has no games");
        return static_cast<double>(wins) / static_cast<double>(games);
    };
    const double uc_divisor = params.undercover_3n_normalization ? 3.0 : 2.0;
    switch (role) {
    case RoleKind::Chameleon: return credit_rate(counts.chameleon_outcomes, 2.0);
    case RoleKind::NonChameleon: return credit_rate(counts.non_chameleon_outcomes, 2.0);
    case RoleKind::Undercover: return credit_rate(counts.undercover_outcomes, uc_divisor);
    case RoleKind::Civilian: return credit_rate(counts.civilian_outcomes, uc_divisor);
    case RoleKind::CostSharer: return ratio(counts.n_wcs, counts.n_cs);
    case RoleKind::Prisoner: return ratio(counts.pd_wins, counts.n_pd);
    case RoleKind::Contributor: return ratio(counts.pg_wins, counts.n_pg);
    }
    throw Error(Errc::InvalidField, "bad role");
}

double overall_win_rate(const std::map<std::string, double>& per_role) {
    static const std::array<RoleKind, 7> kRoles = {
        RoleKind::Chameleon, RoleKind::NonChameleon, RoleKind::Undercover, RoleKind::Civilian,
        RoleKind::CostSharer, RoleKind::Prisoner,    RoleKind::Contributor};
    double sum = 0.0;
    for (RoleKind role : kRoles) {
        auto it = per_role.find(role_name(role));
        if (it == per_role.end())
            throw Error(Errc::MissingRole, std::string(role_name(role)) + " missing");
        sum += it->second;
    }
    return sum / static_cast<double>(kRoles.size());
}

CapabilityScores compute_scores(const MetricCounts& counts, const ScoreParams& params) {
    CapabilityScores s;
    auto term = [&](long num, long den, const char* metric) {
        if (den == 0) {
            s.insufficient.insert(metric);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    s.judgement = term(counts.n_cv, counts.n_v, "judgement");
    s.reasoning =
        term(counts.n_c_gold + counts.n_c_inter, counts.n_gold + counts.n_inter, "reasoning");
    s.deception = term(counts.n_wuc, counts.n_uc, "deception") +
                  params.lambda * term(counts.n_wcg, counts.n_cg, "deception");
    s.self_awareness = term(counts.n_cr, counts.n_rt, "self_awareness");
    s.cooperation = term(counts.n_wcs, counts.n_cs, "cooperation");
    s.coordination = term(counts.n_pcs, counts.n_wcs, "coordination");
    s.rationality = 0.0;
    if (counts.n_pd == 0)
        s.insufficient.insert("rationality");
    else
        s.rationality +=
            static_cast<double>(counts.n_b) / (static_cast<double>(counts.n_pd) * params.t_pd);
    if (counts.n_pg == 0)
        s.insufficient.insert("rationality");
    else
        s.rationality +=
            static_cast<double>(counts.n_li) / (static_cast<double>(counts.n_pg) * params.t_pg);

    static const std::array<RoleKind, 7> kRoles = {
        RoleKind::Chameleon, RoleKind::NonChameleon, RoleKind::Undercover, RoleKind::Civilian,
        RoleKind::CostSharer, RoleKind::Prisoner,    RoleKind::Contributor};
    for (RoleKind role : kRoles) {
        try {
            double w = role_win_rate(counts, role, params);
            s.role_win_rates[role_name(role)] = w;
            if (w > 1.0)
                s.flags.push_back(std::string("win_rate.") + role_name(role) +
                                  " exceeds 1 (literal credit normalization)");
        } catch (const Error& e) {
            if (e.code() != Errc::EmptyOutcomeList) throw;
        }
    }
    if (s.role_win_rates.size() == 7)
        s.win_rate = overall_win_rate(s.role_win_rates);
    else
        s.insufficient.insert("win_rate");

    // Range guards; violations mean corrupted counters.
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0 + 1e-12; };
    if (!in_unit(s.judgement) || !in_unit(s.reasoning) || !in_unit(s.self_awareness) ||
        !in_unit(s.cooperation) || !in_unit(s.coordination) ||
        s.deception < 0.0 || s.deception > 1.0 + params.lambda + 1e-12 || s.rationality < 0.0 ||
        s.rationality > 2.0 + 1e-12)
        throw Error(Errc::InvalidField, "capability score out of range");
    return s;
}

void to_json(json& j, const CapabilityScores& s) {
    j = json{{"win_rate", s.win_rate},
             {"judgement", s.judgement},
             {"reasoning", s.reasoning},
             {"deception", s.deception},
             {"self_awareness", s.self_awareness},
             {"cooperation", s.cooperation},
             {"coordination", s.coordination},
             {"rationality", s.rationality},
             {"role_win_rates", s.role_win_rates},
             {"insufficient", std::vector<std::string>(s.insufficient.begin(),
                                                       s.insufficient.end())},
             {"flags", s.flags}};
}

std::array<double, 7> radar_values(const CapabilityScores& s) {
    return {s.judgement,   s.reasoning,    s.deception, s.self_awareness,
            s.cooperation, s.coordination, s.rationality};
}

double radar_area(const std::array<double, 7>& values) {
    constexpr double kAngle = 2.0 * 3.14159265358979323846 / 7.0;
    double area = 0.0;
    for (size_t i = 0; i < values.size(); ++i)
        area += 0.5 * values[i] * values[(i + 1) % values.size()] * std::sin(kAngle);
    return area;
}

json build_report(std::span<const Transcript> transcripts, const ScoreParams& params) {
    long aborted = 0;
    for (const Transcript& t : transcripts) {
        if (!t.outcome())
            throw Error(Errc::IncompleteTranscript, t.game_id() + " has no outcome");
        if (t.outcome()->aborted) ++aborted;
    }
    MetricCounts counts = extract_counts_parallel(transcripts);
    CapabilityScores scores = compute_scores(counts, params);

    json win_rates_percent = json::object();
    for (const auto& [role, w] : scores.role_win_rates) win_rates_percent[role] = 100.0 * w;
    if (scores.role_win_rates.size() == 7) win_rates_percent["overall"] = 100.0 * scores.win_rate;

    std::array<double, 7> radar = radar_values(scores);
    json axes = json::object();
    for (size_t i = 0; i < radar.size(); ++i) axes[kRadarAxes[i]] = radar[i];

    return json{{"schema", "magic-report/1"},
                {"games", transcripts.size()},
                {"aborted", aborted},
                {"counts", counts},
                {"scores", scores},
                {"win_rates_percent", win_rates_percent},
                {"radar", json{{"axes", axes}, {"area", radar_area(radar)}}}};
}

std::string radar_csv(const CapabilityScores& scores) {
    std::array<double, 7> radar = radar_values(scores);
    std::ostringstream out;
    out << "axis,value\n";
    for (size_t i = 0; i < radar.size(); ++i) out << kRadarAxes[i] << "," << json(radar[i]).dump() << "\n";
    out << "area," << json(radar_area(radar)).dump() << "\n";
    return out.str();
}

} // namespace magic::metrics
