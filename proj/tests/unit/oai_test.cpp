#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <json.hpp>

#include "fixtures.hpp"
#include "peerreview/config.hpp"
#include "peerreview/errors.hpp"
#include "peerreview/harvester.hpp"
#include "peerreview/http_frontend.hpp"
#include "peerreview/service.hpp"
#include "peerreview/xml.hpp"

using namespace peerreview;
using fixtures::make_record;

namespace {

std::chrono::system_clock::time_point fixed_now() {
    return std::chrono::system_clock::from_time_t(1133308800);  // 2005-11-30T00:00:00Z
}

std::string error_code(const std::string& response) {
    const auto root = xml::parse(response);
    const auto* e = root.child("error");
    return e ? e->attribute("code").value_or("") : "";
}

std::vector<PaperRecord> sample_records() {
    return {
        make_record("oai:test:1", {"Alpha, A.", "Bravo, B."}, {"C. Charlie, On things (2001)"}, false, "2005-04-20"),
        make_record("oai:test:2", {"Delta, D."}, {"A. Alpha, B. Bravo, Other things (2002)"}, true, "2005-04-21"),
        make_record("oai:test:3", {"Echo, E."}, {}, false, "2005-04-22", "math"),
    };
}

struct LocalProvider {
    LocalProvider() {
        std::vector<HarvestedRecord> hs;
        for (const auto& r : sample_records()) hs.push_back(fixtures::harvested(r));
        store.ingest(hs);
        ProviderOptions opts;
        opts.page_size = 2;
        opts.token_ttl = std::chrono::seconds(60);
        opts.clock = [this] { return now; };
        provider = std::make_unique<OaiDataProvider>(source, opts);
    }
    std::string call(OaiArguments args) { return provider->handle(args); }

    ServiceStore store;
    StoreMetadataSource source{store, PublicationOptions{}};
    std::chrono::system_clock::time_point now = fixed_now();
    std::unique_ptr<OaiDataProvider> provider;
};

ServiceConfig service_config() {
    ServiceConfig cfg;
    cfg.store_dir.clear();
    cfg.diffusion.mode = DiffusionMode::expected;
    cfg.top_k = 3;
    cfg.port = 0;
    return cfg;
}

} // namespace

TEST_CASE("provider verbs") {
    LocalProvider p;
    const auto identify = p.call({{"verb", "Identify"}});
    CHECK(identify.find("<protocolVersion>2.0</protocolVersion>") != std::string::npos);
    CHECK(identify.find("<earliestDatestamp>2005-04-20</earliestDatestamp>") != std::string::npos);
    CHECK(identify.find("<responseDate>2005-11-30T00:00:00Z</responseDate>") != std::string::npos);

    const auto formats = p.call({{"verb", "ListMetadataFormats"}});
    CHECK(formats.find("<metadataPrefix>oai_dc</metadataPrefix>") != std::string::npos);
    CHECK(formats.find("<metadataPrefix>pr</metadataPrefix>") != std::string::npos);
    // Nothing is reviewed yet, so a specific record only offers oai_dc.
    const auto for_id = p.call({{"verb", "ListMetadataFormats"}, {"identifier", "oai:test:1"}});
    CHECK(for_id.find("<metadataPrefix>pr</metadataPrefix>") == std::string::npos);

    const auto got = p.call({{"verb", "GetRecord"}, {"identifier", "oai:test:2"}, {"metadataPrefix", "oai_dc"}});
    CHECK(error_code(got).empty());
    CHECK(parse_dc_records(got).at(0).identifier == "oai:test:2");
}

TEST_CASE("provider errors are in-band") {
    LocalProvider p;
    CHECK(error_code(p.call({{"verb", "Frobnicate"}})) == "badVerb");
    CHECK(error_code(p.call({})) == "badVerb");
    CHECK(error_code(p.call({{"verb", "Identify"}, {"verb", "Identify"}})) == "badVerb");
    CHECK(error_code(p.call({{"verb", "Identify"}, {"extra", "1"}})) == "badArgument");
    CHECK(error_code(p.call({{"verb", "GetRecord"}, {"identifier", "oai:test:1"}})) == "badArgument");
    CHECK(error_code(p.call({{"verb", "GetRecord"}, {"identifier", "oai:none"}, {"metadataPrefix", "oai_dc"}})) ==
          "idDoesNotExist");
    CHECK(error_code(p.call({{"verb", "GetRecord"}, {"identifier", "oai:test:1"}, {"metadataPrefix", "marc"}})) ==
          "cannotDisseminateFormat");
    CHECK(error_code(p.call({{"verb", "GetRecord"}, {"identifier", "oai:test:1"}, {"metadataPrefix", "pr"}})) ==
          "cannotDisseminateFormat");
    CHECK(error_code(p.call({{"verb", "ListRecords"}, {"metadataPrefix", "pr"}})) == "noRecordsMatch");
    CHECK(error_code(p.call({{"verb", "ListRecords"}, {"metadataPrefix", "oai_dc"}, {"from", "yesterday"}})) ==
          "badArgument");
    CHECK(error_code(p.call({{"verb", "ListRecords"}, {"resumptionToken", "bogus"}})) == "badResumptionToken");
    CHECK(error_code(p.call({{"verb", "ListIdentifiers"}, {"metadataPrefix", "oai_dc"}, {"from", "2005-05-01"},
                             {"until", "2005-04-01"}})) == "badArgument");
}

TEST_CASE("listing pages through resumption tokens") {
    LocalProvider p;
    const auto first = p.call({{"verb", "ListIdentifiers"}, {"metadataPrefix", "oai_dc"}});
    const auto root = xml::parse(first);
    const auto* list = root.child("ListIdentifiers");
    REQUIRE(list != nullptr);
    CHECK(list->children_named("header").size() == 2);
    const auto* token = list->child("resumptionToken");
    REQUIRE(token != nullptr);
    CHECK(token->attribute("completeListSize") == "3");

    const auto second = p.call({{"verb", "ListIdentifiers"}, {"resumptionToken", token->text}});
    const auto root2 = xml::parse(second);
    CHECK(root2.child("ListIdentifiers")->children_named("header").size() == 1);
    CHECK(xml::trim(root2.child("ListIdentifiers")->child("resumptionToken")->text).empty());
    // Tokens are single use.
    CHECK(error_code(p.call({{"verb", "ListIdentifiers"}, {"resumptionToken", token->text}})) == "badResumptionToken");

    SUBCASE("tokens expire") {
        const auto again = xml::parse(p.call({{"verb", "ListRecords"}, {"metadataPrefix", "oai_dc"}}));
        const auto t = again.child("ListRecords")->child("resumptionToken")->text;
        p.now += std::chrono::seconds(61);
        CHECK(error_code(p.call({{"verb", "ListRecords"}, {"resumptionToken", t}})) == "badResumptionToken");
    }
    SUBCASE("selective listing") {
        const auto math = p.call({{"verb", "ListIdentifiers"}, {"metadataPrefix", "oai_dc"}, {"set", "math"}});
        CHECK(xml::parse(math).child("ListIdentifiers")->children_named("header").size() == 1);
        const auto late = p.call({{"verb", "ListIdentifiers"}, {"metadataPrefix", "oai_dc"}, {"from", "2005-04-21"}});
        CHECK(xml::parse(late).child("ListIdentifiers")->children_named("header").size() == 2);
        const auto early = p.call({{"verb", "ListIdentifiers"}, {"metadataPrefix", "oai_dc"},
                                   {"until", "2005-04-20T23:59:59Z"}});
        CHECK(xml::parse(early).child("ListIdentifiers")->children_named("header").size() == 1);
    }
}

TEST_CASE("harvester filters and follows tokens") {
    fixtures::MockRepository upstream(sample_records(), 1);
    HarvestFilter filter;
    filter.require_no_journal_ref = true;
    const auto got = harvest(upstream.url(), filter);
    REQUIRE(got.size() == 2);
    CHECK(got[0].record.identifier == "oai:test:1");
    CHECK(got[1].record.identifier == "oai:test:3");
    CHECK(upstream.requests() == 3);

    filter.min_reference_count = 1;
    CHECK(harvest(upstream.url(), filter).size() == 1);

    HarvestFilter by_set;
    by_set.set_spec = "math";
    CHECK(harvest(upstream.url(), by_set).size() == 1);

    HarvestFilter by_id;
    by_id.explicit_ids = std::vector<std::string>{"oai:test:2"};
    const auto one = harvest(upstream.url(), by_id);
    REQUIRE(one.size() == 1);
    CHECK(one[0].record.identifier == "oai:test:2");

    by_id.explicit_ids = std::vector<std::string>{"oai:none"};
    try {
        harvest(upstream.url(), by_id);
        FAIL("expected a harvest error");
    } catch (const HarvestError& e) {
        CHECK(e.protocol_code() == "idDoesNotExist");
    }

    CHECK_THROWS_AS(harvest(upstream.url(), HarvestFilter{}), ValidationError);
    HarvestFilter empty_set;
    empty_set.set_spec = "physics";
    CHECK(harvest(upstream.url(), empty_set).empty());
}

TEST_CASE("harvester retries and gives up") {
    httplib::Server flaky;
    int calls = 0;
    flaky.Get("/oai", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content("<OAI-PMH><error code=\"noRecordsMatch\">none</error></OAI-PMH>", "text/xml");
    });
    const int port = flaky.bind_to_any_port("127.0.0.1");
    std::thread t([&] { flaky.listen_after_bind(); });
    flaky.wait_until_ready();
    const auto url = "http://127.0.0.1:" + std::to_string(port) + "/oai";

    HarvestFilter f;
    f.require_no_journal_ref = true;
    HttpRetryPolicy retry;
    retry.backoff = std::chrono::milliseconds(1);
    CHECK(harvest(url, f, retry).empty());
    CHECK(calls == 3);

    calls = -10;
    CHECK_THROWS_AS(harvest(url, f, retry), HarvestError);
    flaky.stop();
    t.join();

    CHECK_THROWS_AS(harvest("http://127.0.0.1:1/oai", f, retry), HarvestError);
    CHECK_THROWS_AS(harvest("ftp://example/oai", f, retry), HarvestError);
}

TEST_CASE("solicitation") {
    const auto g = normalize_out_edges(build_graph(fixtures::line_corpus()));
    DiffusionConfig cfg;
    cfg.mode = DiffusionMode::expected;
    auto rec = make_record("oai:x:1", {"Zulu, Z."}, {"C. Charlie, Line work (2003)"});
    const auto review = solicit(rec, g, cfg, 3);
    CHECK(review.roster().size() == 5);
    CHECK(review.solicited() == std::vector<std::string>{"charlie, c.", "bravo, b.", "delta, d."});
    CHECK_FALSE(review.evaluation().has_value());
    CHECK(review.stability() == 0.0);
    CHECK(solicit(rec, g, cfg, 50).solicited().size() == 5);

    auto bare = make_record("oai:x:2", {"Zulu, Z."});
    CHECK_THROWS_AS(solicit(bare, g, cfg, 3), SolicitationError);
    auto strangers = make_record("oai:x:3", {"Zulu, Z."}, {"N. Nobody, Elsewhere (1999)"});
    try {
        solicit(strangers, g, cfg, 3);
        FAIL("expected a solicitation error");
    } catch (const SolicitationError& e) {
        CHECK(std::string(e.what()).find("nobody, n.") != std::string::npos);
    }
}

TEST_CASE("service workflow over http") {
    fixtures::MockRepository upstream(sample_records());
    auto cfg = service_config();
    cfg.upstreams = {upstream.url()};
    cfg.filter.require_no_journal_ref = true;
    cfg.secret_key = "k";
    PeerReviewService service(cfg, fixed_now);
    service.set_graph(build_graph(fixtures::line_corpus()));
    HttpFrontend http(service);
    const int port = http.start("127.0.0.1", 0);
    service.set_base_url("http://127.0.0.1:" + std::to_string(port) + "/oai");

    CHECK(service.harvest_once() == 2);
    CHECK(service.harvest_once() == 0);
    CHECK(service.store().record_count() == 2);

    const auto review = service.solicit("oai:test:1");
    CHECK_THROWS_AS(service.solicit("oai:test:1"), SolicitationError);
    CHECK_THROWS_AS(service.solicit("oai:test:3"), SolicitationError);
    CHECK_THROWS_AS(service.solicit("oai:none"), NotFoundError);

    httplib::Client client("127.0.0.1", port);
    const std::string path = "/api/review/oai:test:1";
    const auto charlie = *review.roster().influence_of("charlie, c.");
    const auto token = service.referee_token("oai:test:1", "charlie, c.");

    auto post = [&](const nlohmann::json& body) { return client.Post(path + "/evaluation", body.dump(), "application/json"); };

    auto res = post({{"referee", "Charlie, C."}, {"score", 0.8}, {"token", token}, {"comment", "Solid."}});
    REQUIRE(res);
    CHECK(res->status == 200);
    auto body = nlohmann::json::parse(res->body);
    CHECK(body["evaluation"].get<double>() == 0.8);
    CHECK(body["stability"].get<double>() == charlie);

    res = post({{"referee", "Charlie, C."}, {"score", 0.8}, {"token", "wrong"}});
    CHECK(res->status == 403);
    res = post({{"referee", "Zulu, Z."}, {"score", 0.5}, {"token", service.referee_token("oai:test:1", "zulu, z.")}});
    CHECK(res->status == 403);
    res = post({{"referee", "Charlie, C."}, {"score", 1.2}, {"token", token}});
    CHECK(res->status == 400);
    CHECK(res->body.find("[0,1]") != std::string::npos);
    res = client.Post("/api/review/oai:none/evaluation", R"({"referee":"Charlie, C.","score":0.5})", "application/json");
    CHECK(res->status == 404);
    res = client.Post(path + "/evaluation", "{broken", "application/json");
    CHECK(res->status == 400);

    // Alpha and Bravo wrote the record, so they are not on its roster.
    CHECK_FALSE(review.roster().influence_of("bravo, b.").has_value());
    httplib::Params form{{"referee", "Bravo, B."}, {"score", "0.5"},
                         {"token", service.referee_token("oai:test:1", "bravo, b.")}};
    CHECK(client.Post(path + "/evaluation", form)->status == 403);
    form = {{"referee", "Delta, D."}, {"score", "0.5"}, {"token", service.referee_token("oai:test:1", "delta, d.")}};
    res = client.Post(path + "/evaluation", form);
    CHECK(res->status == 200);

    res = client.Get(path);
    REQUIRE(res);
    CHECK(res->status == 200);
    body = nlohmann::json::parse(res->body);
    const auto current = *service.store().review("oai:test:1");
    CHECK(body["evaluation"].get<double>() == *current.evaluation());
    CHECK(body["stability"].get<double>() == current.stability());
    CHECK(body["referees"].size() == 2);
    CHECK(body["referees"][0]["comments"][0]["text"] == "Solid.");
    CHECK(client.Get("/api/review/oai:test:3")->status == 404);

    res = client.Get("/oai?verb=GetRecord&identifier=oai:test:1&metadataPrefix=pr");
    REQUIRE(res);
    const auto pr = parse_pr_xml(res->body);
    CHECK(pr.referees.size() == 2);
    CHECK(res->body.find("<datestamp>2005-11-30</datestamp>") != std::string::npos);

    res = client.Get("/oai?verb=ListRecords&metadataPrefix=oai_dc");
    CHECK(res->body.find("<pr:review") != std::string::npos);
    CHECK(client.Get("/schema/pr.xsd")->body.find("targetNamespace=\"urn:x-peerreview:pr:1.0\"") != std::string::npos);
    http.stop();
}

TEST_CASE("blind mode publishes pseudonyms") {
    auto cfg = service_config();
    cfg.blind = true;
    cfg.secret_key = "test-secret";
    PeerReviewService service(cfg, fixed_now);
    service.set_graph(build_graph(fixtures::line_corpus()));
    service.store().ingest({fixtures::harvested(make_record("oai:example.org:cs/0601017", {"Zulu, Z."},
                                                            {"C. Charlie, Line work (2003)"}))});
    service.solicit("oai:example.org:cs/0601017");
    const auto token = service.referee_token("oai:example.org:cs/0601017", "charlie, c.");
    const auto result = service.submit_evaluation("oai:example.org:cs/0601017", "C. Charlie", 0.7, std::nullopt, token);
    CHECK(result.referee == pseudonymize("charlie, c.", "oai:example.org:cs/0601017", "test-secret"));
    const auto json = service.review_json("oai:example.org:cs/0601017").dump();
    CHECK(json.find("charlie") == std::string::npos);
    CHECK(service.export_pr("oai:example.org:cs/0601017").find("charlie") == std::string::npos);
}

TEST_CASE("store persistence") {
    const auto dir = std::filesystem::temp_directory_path() / "peerreview_store_test";
    std::filesystem::remove_all(dir);
    auto cfg = service_config();
    cfg.store_dir = dir.string();
    {
        PeerReviewService service(cfg, fixed_now);
        service.set_graph(build_graph(fixtures::line_corpus()));
        service.store().ingest({fixtures::harvested(sample_records()[0])});
        service.solicit("oai:test:1");
        service.submit_evaluation("oai:test:1", "Charlie, C.", 0.9, std::string("ok"), "");
    }
    PeerReviewService reopened(cfg, fixed_now);
    CHECK(reopened.store().record_count() == 1);
    const auto review = reopened.store().review("oai:test:1");
    REQUIRE(review.has_value());
    CHECK(*review->evaluation() == 0.9);
    CHECK(std::filesystem::exists(dir / "notifications.jsonl"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(R"({
        "upstreams": ["http://127.0.0.1:9/oai"],
        "filter": {"require_no_journal_ref": true, "set_spec": "cs"},
        "diffusion": {"decay": 0.25, "mode": "expected", "particles_per_mention": 20},
        "top_k": 5, "blind": true, "secret_key": "s", "merge_policy": "referees-only",
        "page_size": 10, "token_ttl_s": 30, "port": 0
    })");
    CHECK(cfg.filter.require_no_journal_ref);
    CHECK(*cfg.filter.set_spec == "cs");
    CHECK(cfg.diffusion.decay == 0.25);
    CHECK(cfg.diffusion.mode == DiffusionMode::expected);
    CHECK(cfg.merge_policy == MergePolicy::referees_only);
    CHECK(cfg.token_ttl == std::chrono::seconds(30));
    CHECK_THROWS_AS(parse_config(R"({"blind": true})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"upstreams": ["http://x/oai"]})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"diffusion": {"decay": 2}})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config("nope"), ConfigurationError);
}
