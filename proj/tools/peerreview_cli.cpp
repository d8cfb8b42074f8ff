#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peerreview/coauthorship_graph.hpp"
#include "peerreview/config.hpp"
#include "peerreview/corpus.hpp"
#include "peerreview/errors.hpp"
#include "peerreview/http_frontend.hpp"
#include "peerreview/influence.hpp"
#include "peerreview/service.hpp"

using namespace peerreview;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
    if (g_frontend) g_frontend->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-authorship based referee ranking and peer-review metadata service"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // build-graph
    auto* build = app.add_subcommand("build-graph", "Build the co-authorship graph from a corpus");
    std::string corpus_path, graph_out;
    build->add_option("corpus", corpus_path, "Corpus: .jsonl file, XML file or directory of XML records")->required();
    build->add_option("-o,--output", graph_out, "Graph file to write")->required();

    // rank
    auto* rank = app.add_subcommand("rank", "Rank referees for one record");
    std::string rank_graph, rank_record, rank_refs, rank_mode = "monte_carlo";
    std::size_t top = 25;
    DiffusionConfig dcfg;
    rank->add_option("graph", rank_graph, "Graph file")->required();
    rank->add_option("record", rank_record, "Record XML (oai_dc)")->required();
    rank->add_option("--references", rank_refs, "Extra plain-text reference list, one per line");
    rank->add_flag("--penalty", dcfg.author_penalty_enabled, "Seed negative energy at the manuscript authors");
    rank->add_option("--top", top, "Number of referees to print (0 = all)");
    rank->add_option("--mode", rank_mode, "monte_carlo or expected")->check(CLI::IsMember({"monte_carlo", "expected"}));
    rank->add_option("--seed", dcfg.rng_seed, "RNG seed");
    rank->add_option("--particles", dcfg.particles_per_mention, "Particles per mention");
    rank->add_option("--decay", dcfg.decay, "Energy lost per hop, in (0,1]");
    rank->add_option("--threads", dcfg.threads, "Worker threads (0 = all cores)");

    // service commands
    std::string config_path = "peerreview.json";
    auto* harvest_cmd = app.add_subcommand("harvest", "Harvest the configured upstreams into the store");
    harvest_cmd->add_option("config", config_path, "Service config")->required();

    auto* solicit_cmd = app.add_subcommand("solicit", "Rank and solicit referees for a harvested record");
    std::string record_id;
    bool force = false;
    solicit_cmd->add_option("record-id", record_id)->required();
    solicit_cmd->add_option("-c,--config", config_path, "Service config");
    solicit_cmd->add_flag("--force", force, "Replace an existing review");

    auto* serve_cmd = app.add_subcommand("serve", "Run the OAI-PMH provider and review API");
    serve_cmd->add_option("config", config_path, "Service config")->required();

    auto* export_cmd = app.add_subcommand("export-pr", "Print the pr:review document of a record");
    export_cmd->add_option("record-id", record_id)->required();
    export_cmd->add_option("-c,--config", config_path, "Service config");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*build) {
            const auto corpus = load_corpus(corpus_path);
            const auto graph = build_graph(corpus);
            save_graph(graph_out, graph);
            std::cerr << "papers=" << corpus.size() << " nodes=" << graph.nodes().size()
                      << " edges=" << graph.edges().size() << '\n';
        } else if (*rank) {
            dcfg.mode = rank_mode == "expected" ? DiffusionMode::expected : DiffusionMode::monte_carlo;
            dcfg.validate();
            auto record = parse_dc_record(slurp(rank_record));
            if (!rank_refs.empty()) {
                for (auto& ref : parse_reference_list(slurp(rank_refs))) record.references.push_back(std::move(ref));
            }
            const auto graph = normalize_out_edges(load_graph(rank_graph));
            const auto ranking = rank_referees(graph, record, dcfg);
            for (const auto& name : ranking.unmatched) std::cerr << "not in graph: " << name << '\n';
            if (ranking.referees.empty()) {
                std::cerr << "no referees found\n";
                return 2;
            }
            std::cout << format_influence_report(ranking.referees, top);
        } else if (*harvest_cmd) {
            PeerReviewService service(load_config(config_path));
            const auto changed = service.harvest_once();
            std::cout << "records=" << service.store().record_count() << " changed=" << changed << '\n';
        } else if (*solicit_cmd) {
            PeerReviewService service(load_config(config_path));
            const auto review = service.solicit(record_id, force);
            for (const auto& name : review.solicited()) {
                std::cout << name << ' ' << review.roster().influence_of(name).value_or(0.0);
                const auto token = service.referee_token(record_id, name);
                if (!token.empty()) std::cout << " token=" << token;
                std::cout << '\n';
            }
        } else if (*serve_cmd) {
            const auto cfg = load_config(config_path);
            PeerReviewService service(cfg);
            HttpFrontend frontend(service);
            g_frontend = &frontend;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.start_background_harvest();
            spdlog::info("serving on {}:{}", cfg.bind_address, cfg.port);
            frontend.run(cfg.bind_address, cfg.port);
            g_frontend = nullptr;
        } else if (*export_cmd) {
            PeerReviewService service(load_config(config_path));
            std::cout << service.export_pr(record_id);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
