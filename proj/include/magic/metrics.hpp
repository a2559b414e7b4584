#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "magic/core.hpp"

namespace magic::metrics {

// Raw counters extracted from transcripts. Counters form a commutative
// monoid under operator+, so partitioned extraction merges exactly.
struct MetricCounts {
    // judgement: challenger votes while playing non-chameleon/civilian
    long n_cv = 0, n_v = 0;
    // reasoning: first-hop (vs true roles) and second-hop (vs the target's
    // own recorded first hop) belief entries
    long n_c_gold = 0, n_gold = 0, n_c_inter = 0, n_inter = 0;
    // deception: wins in hidden roles and opposing-chameleon code guesses
    long n_wuc = 0, n_uc = 0, n_wcg = 0, n_cg = 0;
    // self-awareness: role probes
    long n_cr = 0, n_rt = 0;
    // cost sharing: consensus games and challenger-proposed consensus
    long n_wcs = 0, n_cs = 0, n_pcs = 0;
    // rationality: defections and least-contribution rounds
    long n_b = 0, n_pd = 0, n_li = 0, n_pg = 0;

    // per-role outcome material for win rates
    std::vector<int> chameleon_outcomes;
    std::vector<int> non_chameleon_outcomes;
    std::vector<int> undercover_outcomes;
    std::vector<int> civilian_outcomes;
    long cs_games = 0, cs_successes = 0;
    long pd_games = 0, pd_wins = 0;
    long pg_games = 0, pg_wins = 0;

    MetricCounts& operator+=(const MetricCounts& other);
    friend MetricCounts operator+(MetricCounts a, const MetricCounts& b) { return a += b; }
    bool operator==(const MetricCounts&) const = default;
};

void to_json(json& j, const MetricCounts& c);
void from_json(const json& j, MetricCounts& c);

// Ranges by formula: all in [0,1] except deception in [0, 1+lambda] and
// rationality in [0,2].
struct CapabilityScores {
    double win_rate = 0.0;
    double judgement = 0.0;
    double reasoning = 0.0;
    double deception = 0.0;
    double self_awareness = 0.0;
    double cooperation = 0.0;
    double coordination = 0.0;
    double rationality = 0.0;
    std::map<std::string, double> role_win_rates; // absent roles omitted
    std::set<std::string> insufficient;           // metrics with a zero denominator
    std::vector<std::string> flags;               // e.g. literal win rates above 1

    bool operator==(const CapabilityScores&) const = default;
};

void to_json(json& j, const CapabilityScores& s);

struct ScoreParams {
    double lambda = 0.25; // weight of the code-guess term in deception
    int t_pd = 5;         // rounds per PD competition
    int t_pg = 5;         // rounds per PG competition
    bool undercover_3n_normalization = false; // literal 2n divisor by default
};

struct ExtractParams {
    // An analysis with no parseable first-hop statement counts as one
    // incorrect entry by default; set false to exclude it instead.
    bool unparseable_counts_incorrect = true;
};

// Counts from complete transcripts. Aborted games are skipped; a transcript
// without an outcome throws IncompleteTranscript. Serial reference
// implementation.
MetricCounts extract_counts(std::span<const Transcript> transcripts,
                            const ExtractParams& params = {});

// OpenMP-partitioned extraction with a final monoid merge; equals
// extract_counts on every input.
MetricCounts extract_counts_parallel(std::span<const Transcript> transcripts,
                                     const ExtractParams& params = {});

// The seven formulas, computed exactly as defined; zero-denominator terms
// contribute 0 and mark the metric insufficient.
CapabilityScores compute_scores(const MetricCounts& counts, const ScoreParams& params = {});

// Credit-sum win rate for the four social roles, success rate for cost
// sharing, winner fraction for PD/PG. Throws EmptyOutcomeList.
double role_win_rate(const MetricCounts& counts, RoleKind role, const ScoreParams& params = {});

// Arithmetic mean over the seven role win rates; throws MissingRole.
double overall_win_rate(const std::map<std::string, double>& per_role);

inline constexpr std::array<const char*, 7> kRadarAxes = {
    "judgement", "reasoning",    "deception",  "self_awareness",
    "cooperation", "coordination", "rationality"};

std::array<double, 7> radar_values(const CapabilityScores& scores);

// Shoelace polygon area over the seven axes at equal angles.
double radar_area(const std::array<double, 7>& values);

// ── Reports ──────────────────────────────────────────────────────────

// report.json: raw counts, scores, win rates (fraction and percent),
// radar values and area. radar.csv: axis,value rows plus an area row.
json build_report(std::span<const Transcript> transcripts, const ScoreParams& params = {});
std::string radar_csv(const CapabilityScores& scores);

} // namespace magic::metrics
