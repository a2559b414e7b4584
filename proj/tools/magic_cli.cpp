// Command-line front door: single competitions, tournaments, and report
// recomputation from stored transcripts.
//
// Exit codes: 0 success, 2 config error, 3 game aborts, 4 gateway failure.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magic/engine.hpp"
#include "magic/tournament.hpp"

using namespace magic;

namespace {

std::vector<Scenario> parse_scenarios(const std::vector<std::string>& names) {
    std::vector<Scenario> out;
    for (const std::string& name : names) out.push_back(scenario_from_name(name));
    return out;
}

int finish(const tournament::TournamentResult& result) {
    for (const auto& game : result.games)
        if (game.aborted)
            std::cerr << "aborted: " << game.game_id << ": " << game.reason << "\n";
    std::cout << result.report.at("scores").dump(2) << "\n";
    if (result.gateway_failure) return 4;
    if (result.aborted > 0) return 3;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-agent competition engine and metrics suite"};
    app.require_subcommand(1);

    std::string challenger = "scripted:baseline";
    std::string opponent = "scripted:baseline";
    bool pgm = false;
    std::vector<std::string> scenario_names;
    std::string topics = "assets/topics";
    std::string templates = "assets/templates/manifest.json";
    std::string fixtures = "fixtures";
    std::string mode = "replay";
    std::string out = "runs/out";
    uint64_t seed = 0;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--challenger", challenger, "challenger spec: scripted:<strategy> or a model id");
        cmd->add_flag("--pgm", pgm, "wrap the challenger model with the two-hop analysis step");
        cmd->add_option("--opponent", opponent, "opponent spec for every other seat");
        cmd->add_option("--topics", topics, "topic fixture directory");
        cmd->add_option("--templates", templates, "prompt template manifest");
        cmd->add_option("--fixtures", fixtures, "gateway record/replay store");
        cmd->add_option("--mode", mode, "live|record|replay")
            ->check(CLI::IsMember({"live", "record", "replay"}));
        cmd->add_option("--seed", seed, "tournament seed");
        cmd->add_option("--out", out, "output directory");
    };

    CLI::App* tour = app.add_subcommand("tournament", "run the full competition suite");
    add_common(tour);
    tour->add_option("--scenarios", scenario_names, "subset of scenarios (comma separated)")
        ->delimiter(',');
    tour->add_option("--jobs", jobs, "concurrent games")->check(CLI::PositiveNumber);

    CLI::App* run = app.add_subcommand("run", "run a single competition");
    add_common(run);
    std::string run_scenario = "chameleon";
    std::string run_setting;
    run->add_option("--scenario", run_scenario, "scenario name")->required();
    run->add_option("--setting", run_setting, "topic setting id (default: first in the fixture)");

    CLI::App* report = app.add_subcommand("report", "recompute metrics from stored transcripts");
    std::string report_in;
    std::string report_out = "runs/report";
    report->add_option("--in", report_in, "transcript directory")->required();
    report->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tour->parsed()) {
            tournament::TournamentConfig config;
            config.challenger = agents::AgentSpec::parse(challenger, pgm);
            config.opponent = agents::AgentSpec::parse(opponent, false);
            config.scenarios = parse_scenarios(scenario_names);
            config.topics_dir = topics;
            config.templates_manifest = templates;
            config.fixtures_dir = fixtures;
            config.seed = seed;
            config.jobs = jobs;
            config.out_dir = out;
            config.mode = gateway::mode_from_name(mode);
            return finish(tournament::run_tournament(config));
        }

        if (run->parsed()) {
            tournament::TournamentConfig config;
            config.challenger = agents::AgentSpec::parse(challenger, pgm);
            config.opponent = agents::AgentSpec::parse(opponent, false);
            config.scenarios = {scenario_from_name(run_scenario)};
            config.topics_dir = topics;
            config.templates_manifest = templates;
            config.fixtures_dir = fixtures;
            config.seed = seed;
            config.out_dir = out;
            config.mode = gateway::mode_from_name(mode);

            TemplateSet tpl = TemplateSet::load(config.templates_manifest);
            gateway::GatewayConfig gw_config;
            gw_config.fixtures_dir = fixtures;
            gateway::Gateway gw(gw_config);

            auto settings = load_topic_file(topics + "/" + run_scenario + ".json");
            const TopicSetting* chosen = nullptr;
            for (const TopicSetting& s : settings)
                if (run_setting.empty() || s.id == run_setting) {
                    chosen = &s;
                    break;
                }
            if (!chosen) throw Error(Errc::ConfigError, "no setting '" + run_setting + "'");
            ValidatedSetting setting = validate_topic_setting(*chosen);

            uint64_t game_seed = tournament::derive_seed(seed, run_scenario + "/" + chosen->id);
            std::map<PlayerId, std::shared_ptr<agents::Agent>> seats;
            for (int k = 1; k <= setting.players(); ++k) {
                PlayerId p{k};
                const agents::AgentSpec& spec =
                    p == setting.challenger() ? config.challenger : config.opponent;
                seats[p] = agents::make_agent(spec, game_seed * 16 + static_cast<uint64_t>(k),
                                              &gw, config.mode, &tpl);
            }
            engine::GameResult result =
                engine::run_competition(setting, seats, game_seed, tpl);
            engine::write_transcript(result.transcript, game_seed, out + "/transcripts");
            std::cout << json(result.outcome).dump(2) << "\n";
            return result.outcome.aborted
                       ? (result.outcome.abort_reason.rfind("FixtureMiss", 0) == 0 ? 4 : 3)
                       : 0;
        }

        if (report->parsed()) {
            json doc = tournament::write_report(report_in, report_out);
            std::cout << doc.at("scores").dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case Errc::FixtureMiss:
        case Errc::GatewayTimeout:
        case Errc::RateLimited:
        case Errc::AuthError: return 4;
        default: return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
