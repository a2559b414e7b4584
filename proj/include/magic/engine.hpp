#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "magic/agents.hpp"
#include "magic/core.hpp"
#include "magic/engine_votes.hpp"
#include "magic/templates.hpp"

namespace magic::engine {

struct GameResult {
    Outcome outcome;
    Transcript transcript;
};

// Moderator loop: sequences stages per scenario, routes visibility-filtered
// views to agents, tallies votes and records the transcript. One game is
// strictly sequential; concurrent games share nothing.
//
// Agent failures (gateway errors after its retry budget) abort the game;
// the transcript is closed with an aborted outcome, which metrics skip.
// Unparseable replies are re-prompted up to 3 times, then a deterministic
// default action keeps the game total.
GameResult run_competition(const ValidatedSetting& setting,
                           const std::map<PlayerId, std::shared_ptr<agents::Agent>>& players,
                           uint64_t seed, const TemplateSet& templates);

inline constexpr int kMaxReprompts = 3;

// ── Persistence ──────────────────────────────────────────────────────

// One JSONL line per event (fields as GameEvent plus an ISO-8601
// timestamp) under <dir>/<scenario>/<setting_id>/<seed>.jsonl, with a
// sidecar <seed>.meta.json carrying the setting and the outcome.
// Timestamps are logical (fixed epoch + seq) so identical games serialize
// byte-identically.
void write_transcript(const Transcript& transcript, uint64_t seed, const std::string& dir);

struct StoredGame {
    Transcript transcript;
    uint64_t seed = 0;
};

StoredGame read_transcript(const std::string& meta_path);

// All games under a directory tree, sorted by path. Throws
// IncompleteTranscript naming files without an outcome.
std::vector<StoredGame> read_transcript_dir(const std::string& dir);

std::string logical_timestamp(int seq);

} // namespace magic::engine
