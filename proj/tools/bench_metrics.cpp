// Benchmark: serial reference extract_counts vs the OpenMP-partitioned
// extract_counts_parallel over a synthetic transcript corpus. Verifies the
// two implementations agree before timing them.

#include <chrono>
#include <iostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magic/engine.hpp"
#include "magic/metrics.hpp"

using namespace magic;

namespace {

TopicSetting pd_setting(int i) {
    TopicSetting s;
    s.id = "bench-pd-" + std::to_string(i);
    s.scenario = Scenario::PrisonersDilemma;
    s.challenger_position = PlayerId{1 + i % 3};
    s.payload = PDScoring{3, 1, 5, 2};
    return s;
}

TopicSetting pg_setting(int i) {
    TopicSetting s;
    s.id = "bench-pg-" + std::to_string(i);
    s.scenario = Scenario::PublicGood;
    s.challenger_position = PlayerId{1 + i % 3};
    s.payload = PublicGoodTopic{1.5, 100.0};
    return s;
}

// An undercover game annotated with multi-line analyses for every player,
// so extraction pays the realistic belief-parsing cost.
Transcript pgm_undercover_transcript(int i) {
    TopicSetting raw;
    raw.id = "bench-uc-" + std::to_string(i);
    raw.scenario = Scenario::Undercover;
    raw.challenger_position = PlayerId{1 + i % 3};
    raw.payload = UndercoverTopic{"coffee", "tea", PlayerId{1 + (i + 1) % 3}};

    Transcript t("undercover/" + raw.id + "/0", validate_topic_setting(raw));
    int seq = 0;
    auto add = [&](int turn, StageKind stage, int actor, Visibility vis, std::string text,
                   std::optional<Action> action) {
        GameEvent e;
        e.game_id = t.game_id();
        e.turn = turn;
        e.seq = seq++;
        e.stage = stage;
        if (actor > 0) e.actor = PlayerId{actor};
        e.visibility = std::move(vis);
        e.raw_text = std::move(text);
        e.parsed_action = std::move(action);
        t.append(std::move(e));
    };

    for (int round = 1; round <= 2; ++round) {
        for (int p = 1; p <= 3; ++p) {
            int o1 = p == 1 ? 2 : 1, o2 = p == 3 ? 2 : 3;
            std::string analysis =
                "As Player " + std::to_string(p) + ",\nI think Player " + std::to_string(o1) +
                " is undercover, because the clue drifted away from the common word and "
                "felt rehearsed.\nI think Player " + std::to_string(o2) +
                " is not suspicious, because the clue lined up with everyone else's.\n"
                "As for other players' thoughts:\nI think now Player " + std::to_string(o1) +
                " thinks:\nPlayer " + std::to_string(o2) +
                " is more suspicious, because of the vague phrasing.\nI think now Player " +
                std::to_string(o2) + " thinks:\nPlayer " + std::to_string(o1) +
                " is more suspicious, because of the oddly specific detail.";
            add(round, StageKind::PgmAnalysis, p, Visibility::priv({PlayerId{p}}), analysis,
                std::nullopt);
            add(round, StageKind::Clue, p, Visibility::pub(), "a morning ritual in a cup",
                ClueAction{"a morning ritual in a cup"});
        }
    }
    for (int p = 1; p <= 3; ++p)
        add(3, StageKind::RoleProbe, p, Visibility::priv({PlayerId{p}}), "no",
            RoleClaimAction{false});
    for (int p = 1; p <= 3; ++p)
        add(4, StageKind::Accusation, p, Visibility::pub(), "Player " + std::to_string(p == 1 ? 2 : 1),
            VoteAction{PlayerId{p == 1 ? 2 : 1}});

    Outcome o;
    o.scenario = Scenario::Undercover;
    o.code = 1;
    t.set_outcome(o);
    return t;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    int copies = argc > 1 ? std::stoi(argv[1]) : 2000;
    const char* assets = std::getenv("MAGIC_ASSETS");
    TemplateSet templates =
        TemplateSet::load(std::string(assets ? assets : "assets") + "/templates/manifest.json");

    std::vector<Transcript> base;
    for (int i = 0; i < 3; ++i) {
        for (TopicSetting raw : {pd_setting(i), pg_setting(i)}) {
            ValidatedSetting setting = validate_topic_setting(raw);
            std::map<PlayerId, std::shared_ptr<agents::Agent>> seats;
            for (int k = 1; k <= 3; ++k) {
                const char* strategy = k == 1 ? "always_defect" : "always_cooperate";
                seats[PlayerId{k}] = std::make_shared<agents::ScriptedAgent>(
                    strategy, json::object(), static_cast<uint64_t>(k));
            }
            base.push_back(engine::run_competition(setting, seats, 7, templates).transcript);
        }
        base.push_back(pgm_undercover_transcript(i));
    }

    std::vector<Transcript> corpus;
    corpus.reserve(base.size() * static_cast<size_t>(copies));
    for (int i = 0; i < copies; ++i)
        for (const Transcript& t : base) corpus.push_back(t);

    std::cout << "corpus: " << corpus.size() << " transcripts\n";
#ifdef _OPENMP
    std::cout << "openmp threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "openmp: disabled at build time\n";
#endif

    auto serial_counts = metrics::extract_counts(corpus);
    auto parallel_counts = metrics::extract_counts_parallel(corpus);
    if (!(serial_counts == parallel_counts)) {
        std::cerr << "FAIL: parallel extraction disagrees with the serial reference\n";
        return 1;
    }
    std::cout << "parallel == serial: ok\n";

    auto t0 = std::chrono::steady_clock::now();
    (void)metrics::extract_counts(corpus);
    double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    (void)metrics::extract_counts_parallel(corpus);
    double parallel_s = seconds_since(t0);

    std::cout << "serial:   " << serial_s << " s\n";
    std::cout << "parallel: " << parallel_s << " s\n";
    std::cout << "speedup:  " << (parallel_s > 0 ? serial_s / parallel_s : 0.0) << "x\n";
    return 0;
}
