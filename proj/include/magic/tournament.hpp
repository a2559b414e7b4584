#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "magic/agents.hpp"
#include "magic/core.hpp"
#include "magic/engine.hpp"
#include "magic/gateway.hpp"
#include "magic/metrics.hpp"

namespace magic::tournament {

struct TournamentConfig {
    agents::AgentSpec challenger{agents::AgentSpec::Scripted, "baseline", {}};
    agents::AgentSpec opponent{agents::AgentSpec::Scripted, "baseline", {}};
    std::vector<Scenario> scenarios; // empty = all five
    std::string topics_dir = "assets/topics";
    std::string templates_manifest = "assets/templates/manifest.json";
    std::string fixtures_dir = "fixtures";
    uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir = "runs/out";
    gateway::Mode mode = gateway::Mode::Replay;
    metrics::ScoreParams score_params;
};

struct GameStatus {
    std::string game_id;
    bool aborted = false;
    bool gateway_failure = false;
    std::string reason;
    std::string transcript_path; // relative to out_dir
};

struct TournamentResult {
    std::vector<GameStatus> games;
    json report;
    int aborted = 0;
    bool gateway_failure = false;
};

// Runs every (scenario, topic setting) competition with the challenger at
// its fixture seat and the opponent everywhere else; writes transcripts,
// report.json, radar.csv and run_manifest.json under out_dir. Games are
// independent and run on up to `jobs` threads.
TournamentResult run_tournament(const TournamentConfig& config);

// Recomputes counts and scores from stored transcripts alone and writes
// report.json + radar.csv + report manifest into out_dir. Deterministic:
// unchanged transcripts give bit-identical outputs.
json write_report(const std::string& transcript_dir, const std::string& out_dir,
                  const metrics::ScoreParams& params = {});

// Stable per-game seed derived from the tournament seed and the game id.
uint64_t derive_seed(uint64_t base, const std::string& game_key);

std::string sha256_file(const std::string& path);

} // namespace magic::tournament
