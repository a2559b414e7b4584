#include "magic/tournament.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;

namespace magic::tournament {

uint64_t derive_seed(uint64_t base, const std::string& game_key) {
    uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char c : game_key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    uint64_t z = base ^ h; // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::MissingField, "cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return gateway::sha256_hex(data);
}

namespace {

bool is_gateway_reason(const std::string& reason) {
    for (const char* prefix : {"FixtureMiss", "GatewayTimeout", "RateLimited", "AuthError"})
        if (reason.rfind(prefix, 0) == 0) return true;
    return false;
}

std::vector<Scenario> all_scenarios() {
    return {Scenario::Chameleon, Scenario::Undercover, Scenario::CostSharing,
            Scenario::PrisonersDilemma, Scenario::PublicGood};
}

struct PlannedGame {
    ValidatedSetting setting;
    uint64_t seed;
};

std::vector<PlannedGame> plan_games(const TournamentConfig& config) {
    std::vector<Scenario> scenarios =
        config.scenarios.empty() ? all_scenarios() : config.scenarios;
    std::vector<PlannedGame> games;
    for (Scenario scenario : scenarios) {
        fs::path file = fs::path(config.topics_dir) / (std::string(scenario_name(scenario)) + ".json");
        std::vector<TopicSetting> settings = load_topic_file(file.string());
        for (const TopicSetting& raw : settings) {
            ValidatedSetting setting = validate_topic_setting(raw);
            std::string key = std::string(scenario_name(scenario)) + "/" + raw.id;
            games.push_back({setting, derive_seed(config.seed, key)});
        }
    }
    return games;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

json write_report(const std::string& transcript_dir, const std::string& out_dir,
                  const metrics::ScoreParams& params) {
    std::vector<engine::StoredGame> stored = engine::read_transcript_dir(transcript_dir);
    if (stored.empty())
        throw Error(Errc::IncompleteTranscript, "no transcripts under " + transcript_dir);
    std::vector<Transcript> transcripts;
    transcripts.reserve(stored.size());
    for (engine::StoredGame& g : stored) transcripts.push_back(std::move(g.transcript));

    json report = metrics::build_report(transcripts, params);
    metrics::CapabilityScores scores =
        metrics::compute_scores(report.at("counts").get<metrics::MetricCounts>(), params);

    write_file(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    write_file(fs::path(out_dir) / "radar.csv", metrics::radar_csv(scores));
    return report;
}

TournamentResult run_tournament(const TournamentConfig& config) {
    if (config.jobs < 1) throw Error(Errc::ConfigError, "jobs must be >= 1");
    TemplateSet templates = TemplateSet::load(config.templates_manifest);
    gateway::GatewayConfig gw_config;
    gw_config.fixtures_dir = config.fixtures_dir;
    gateway::Gateway gw(gw_config);

    std::vector<PlannedGame> games = plan_games(config);
    if (games.empty()) throw Error(Errc::ConfigError, "no competitions planned");

    const std::string transcript_dir = (fs::path(config.out_dir) / "transcripts").string();
    std::vector<GameStatus> statuses(games.size());

    const auto n = static_cast<long>(games.size());
#ifdef _OPENMP
    omp_set_num_threads(config.jobs);
#endif
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const PlannedGame& game = games[static_cast<size_t>(i)];
        GameStatus& status = statuses[static_cast<size_t>(i)];
        try {
            std::map<PlayerId, std::shared_ptr<agents::Agent>> seats;
            for (int k = 1; k <= game.setting.players(); ++k) {
                PlayerId p{k};
                const agents::AgentSpec& spec =
                    p == game.setting.challenger() ? config.challenger : config.opponent;
                seats[p] = agents::make_agent(spec, game.seed * 16 + static_cast<uint64_t>(k), &gw,
                                              config.mode, &templates);
            }
            engine::GameResult result =
                engine::run_competition(game.setting, seats, game.seed, templates);
            engine::write_transcript(result.transcript, game.seed, transcript_dir);

            status.game_id = result.transcript.game_id();
            status.aborted = result.outcome.aborted;
            status.reason = result.outcome.abort_reason;
            status.gateway_failure = status.aborted && is_gateway_reason(status.reason);
            status.transcript_path = "transcripts/" + status.game_id + ".jsonl";
        } catch (const std::exception& e) {
            status.game_id = std::string(scenario_name(game.setting.scenario())) + "/" +
                             game.setting.get().id + "/" + std::to_string(game.seed);
            status.aborted = true;
            status.reason = e.what();
            status.gateway_failure = is_gateway_reason(status.reason);
        }
    }

    TournamentResult result;
    result.games = statuses;
    for (const GameStatus& s : statuses) {
        if (s.aborted) ++result.aborted;
        if (s.gateway_failure) result.gateway_failure = true;
    }

    result.report = write_report(transcript_dir, config.out_dir, config.score_params);

    // Run manifest: config snapshot, fixture versions, and every artifact
    // with its hash.
    json fixture_versions = json::object();
    for (Scenario scenario : config.scenarios.empty() ? all_scenarios() : config.scenarios) {
        fs::path file =
            fs::path(config.topics_dir) / (std::string(scenario_name(scenario)) + ".json");
        fixture_versions[std::string("topics/") + scenario_name(scenario)] =
            sha256_file(file.string());
    }
    fixture_versions["templates_manifest"] = sha256_file(config.templates_manifest);

    json manifest{{"schema", "magic-run/1"},
                  {"config", json{{"challenger", config.challenger.describe()},
                                  {"opponent", config.opponent.describe()},
                                  {"seed", config.seed},
                                  {"mode", gateway::mode_name(config.mode)},
                                  {"jobs", config.jobs},
                                  {"topics_dir", config.topics_dir}}},
                  {"fixture_versions", fixture_versions}};
    json game_list = json::array();
    std::vector<std::string> artifacts = {"report.json", "radar.csv"};
    for (const GameStatus& s : statuses) {
        json g{{"game_id", s.game_id},
               {"status", s.aborted ? "aborted" : "ok"},
               {"reason", s.reason}};
        if (!s.transcript_path.empty()) {
            g["transcript"] = s.transcript_path;
            g["sha256"] = sha256_file((fs::path(config.out_dir) / s.transcript_path).string());
            artifacts.push_back(s.transcript_path);
            std::string meta = s.transcript_path;
            meta.replace(meta.size() - 6, 6, ".meta.json");
            artifacts.push_back(meta);
        }
        game_list.push_back(std::move(g));
    }
    manifest["games"] = game_list;
    json artifact_list = json::array();
    std::sort(artifacts.begin(), artifacts.end());
    for (const std::string& rel : artifacts)
        artifact_list.push_back(json{
            {"path", rel}, {"sha256", sha256_file((fs::path(config.out_dir) / rel).string())}});
    manifest["artifacts"] = artifact_list;
    write_file(fs::path(config.out_dir) / "run_manifest.json", manifest.dump(2) + "\n");

    return result;
}

} // namespace magic::tournament
