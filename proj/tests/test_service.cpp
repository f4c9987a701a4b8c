#include "mtrail/error.hpp"
#include "mtrail/service.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

using namespace mtrail;
using namespace testing;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

// Holds every runner call until opened.
struct Gate {
    std::mutex m;
    std::condition_variable cv;
    bool open = false;
    std::atomic<int> calls{0};

    TraceRunner runner(std::function<std::string(const TraceRequest&)> body = {}) {
        return [this, body](const TraceRequest& r, const std::function<void()>& on_tracing) {
            ++calls;
            on_tracing();
            std::unique_lock lock(m);
            cv.wait(lock, [this] { return open; });
            return body ? body(r) : std::string("{\"line\": ") + std::to_string(r.line) + "}\n";
        };
    }
    void release() {
        {
            std::lock_guard lock(m);
            open = true;
        }
        cv.notify_all();
    }
};

TraceRequest request_for(int line, std::string repo = "r") {
    TraceRequest r;
    r.repo = std::move(repo);
    r.commit = "HEAD";
    r.file = "A.java";
    r.method = "f";
    r.line = line;
    return r;
}

ServiceConfig small_config(std::size_t workers, std::size_t capacity, const std::filesystem::path& cache) {
    ServiceConfig c;
    c.workers = workers;
    c.queue_capacity = capacity;
    c.cache_dir = cache;
    return c;
}

bool is_ordered(const std::vector<JobState>& states) {
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (static_cast<int>(states[i]) <= static_cast<int>(states[i - 1])) {
            return false;
        }
    }
    return true;
}

// Server on an ephemeral port, torn down with the object.
struct RunningServer {
    HttpFrontend frontend;
    int port;
    std::thread thread;

    explicit RunningServer(TraceService& svc) : frontend(svc), port(frontend.bind("127.0.0.1", 0)) {
        REQUIRE(port > 0);
        thread = std::thread([this] { frontend.serve(); });
    }
    ~RunningServer() {
        frontend.stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }
};

std::string poll_result(httplib::Client& client, const std::string& id) {
    for (int i = 0; i < 600; ++i) {
        auto status = client.Get("/api/v1/jobs/" + id);
        REQUIRE(status);
        const auto state = json::parse(status->body)["state"].get<std::string>();
        if (state == "Done" || state == "Failed") {
            auto result = client.Get("/api/v1/jobs/" + id + "/result");
            REQUIRE(result);
            return result->body;
        }
        std::this_thread::sleep_for(20ms);
    }
    FAIL("job did not finish");
    return {};
}

}  // namespace

TEST_CASE("request parsing names every bad field") {
    const auto ok = parse_trace_request(
        R"({"repo":"x","commit":"HEAD","file":"A.java","method":"f","line":3,"config":{"threshold_same":0.6,"include_javadoc":false,"max_commits":10}})");
    CHECK(ok.line == 3);
    CHECK(ok.config.thresholds.same_file == 0.6);
    CHECK_FALSE(ok.config.include_javadoc);
    CHECK(ok.config.max_commits == 10u);

    try {
        parse_trace_request(R"({"repo":"x","commit":"","file":"A.java","method":"f"})");
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
        const std::string what = e.what();
        CHECK(what.find("line: required") != std::string::npos);
        CHECK(what.find("commit:") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_trace_request("[]"), Error);
    CHECK_THROWS_AS(parse_trace_request("{"), Error);
    CHECK_THROWS_AS(parse_trace_request(R"({"repo":"x","commit":"c","file":"f","method":"m","line":0})"), Error);
    CHECK_THROWS_AS(
        parse_trace_request(R"({"repo":"x","commit":"c","file":"f","method":"m","line":1,"config":{"threshold_same":"hi"}})"),
        Error);
    CHECK(request_for(1).key() == request_for(1).key());
    CHECK(request_for(1).key() != request_for(2).key());
}

TEST_CASE("admission control and coalescing") {
    TempDir tmp;
    Gate gate;
    TraceService svc(small_config(4, 32, tmp / "cache"), gate.runner());
    std::vector<std::string> ids;
    for (int i = 1; i <= 32; ++i) {
        const auto s = svc.submit(request_for(i));
        REQUIRE(s.admission == TraceService::Admission::Accepted);
        ids.push_back(s.job_id);
    }
    const auto full = svc.submit(request_for(33));
    CHECK(full.admission == TraceService::Admission::QueueFull);
    CHECK(full.job_id.empty());

    const auto again = svc.submit(request_for(5));
    CHECK(again.admission == TraceService::Admission::Coalesced);
    CHECK(again.job_id == ids[4]);

    // at most `workers` jobs run at once
    for (int i = 0; i < 100 && gate.calls < 4; ++i) {
        std::this_thread::sleep_for(5ms);
    }
    std::this_thread::sleep_for(50ms);
    CHECK(gate.calls == 4);
    CHECK(svc.job(ids.back())->state == JobState::Queued);

    gate.release();
    for (const auto& id : ids) {
        const auto done = svc.wait(id, 10s);
        REQUIRE(done);
        CHECK(done->state == JobState::Done);
        CHECK(done->transitions ==
              std::vector<JobState>{JobState::Queued, JobState::Cloning, JobState::Tracing, JobState::Done});
        CHECK(done->finished_at.has_value());
    }
    CHECK(json::parse(svc.job(ids[6])->result)["line"] == 7);
    CHECK(gate.calls == 32);

    // finished work no longer coalesces
    CHECK(svc.submit(request_for(5)).admission == TraceService::Admission::Accepted);
    CHECK_FALSE(svc.job("0000000000000000").has_value());
}

TEST_CASE("failures become error documents") {
    TempDir tmp;
    TraceService svc(small_config(2, 8, tmp / "cache"),
                     [](const TraceRequest& r, const std::function<void()>& on_tracing) -> std::string {
                         if (r.line == 1) {
                             throw Error(ErrorCode::UnknownCommit, "no such commit");
                         }
                         on_tracing();
                         throw std::runtime_error("boom");
                     });
    const auto a = svc.wait(svc.submit(request_for(1)).job_id, 10s);
    REQUIRE(a);
    CHECK(a->state == JobState::Failed);
    CHECK(a->error_code == "UnknownCommit");
    CHECK(json::parse(a->result)["error"] == "UnknownCommit");
    CHECK(is_ordered(a->transitions));
    CHECK(a->transitions.back() == JobState::Failed);

    const auto b = svc.wait(svc.submit(request_for(2)).job_id, 10s);
    REQUIRE(b);
    CHECK(b->error_code == "InternalError");
    CHECK(b->transitions ==
          std::vector<JobState>{JobState::Queued, JobState::Cloning, JobState::Tracing, JobState::Failed});
}

TEST_CASE("environment configuration") {
    setenv("HF_WORKERS", "3", 1);
    setenv("HF_QUEUE_CAP", "9", 1);
    setenv("HF_CACHE_DIR", "/tmp/somewhere", 1);
    const auto c = service_config_from_env();
    CHECK(c.workers == 3);
    CHECK(c.queue_capacity == 9);
    CHECK(c.cache_dir == "/tmp/somewhere");
    unsetenv("HF_WORKERS");
    unsetenv("HF_QUEUE_CAP");
    unsetenv("HF_CACHE_DIR");
    const auto d = service_config_from_env();
    CHECK(d.workers == 4);
    CHECK(d.queue_capacity == 32);
}

TEST_CASE("http api end to end") {
    TempDir tmp;
    const auto built = build_scenario(scenario("combo-chain").steps, tmp / "repo");
    const auto& loc = built.truth.locator;
    TraceService svc(small_config(2, 8, tmp / "cache"));
    RunningServer server(svc);
    auto client = server.client();

    json body{{"repo", built.repo.string()}, {"commit", loc.commit.str()}, {"file", loc.file},
              {"method", loc.name},          {"line", loc.line}};

    SECTION("trace result matches the command line byte for byte") {
        auto posted = client.Post("/api/v1/trace", body.dump(), "application/json");
        REQUIRE(posted);
        CHECK(posted->status == 202);
        const auto id = json::parse(posted->body)["job_id"].get<std::string>();
        const auto result = poll_result(client, id);

        const auto cli = run_process(MTRAIL_CLI, {"--repo", built.repo.string(), "--commit", loc.commit.str(), "--file",
                                                  loc.file, "--method", loc.name, "--line", std::to_string(loc.line),
                                                  "--cache-dir", (tmp / "cli-cache").string()});
        REQUIRE(cli.exit_code == 0);
        CHECK(result == cli.out);
        CHECK(json::parse(result)["records"].size() == 5);

        auto status = client.Get("/api/v1/jobs/" + id);
        REQUIRE(status);
        const auto s = json::parse(status->body);
        CHECK(s["state"] == "Done");
        CHECK(s["transitions"] == json::array({"Queued", "Cloning", "Tracing", "Done"}));
        CHECK(s["error"].is_null());
    }
    SECTION("bad requests") {
        json missing = body;
        missing.erase("line");
        auto r = client.Post("/api/v1/trace", missing.dump(), "application/json");
        REQUIRE(r);
        CHECK(r->status == 400);
        CHECK(json::parse(r->body)["message"].get<std::string>().find("line: required") != std::string::npos);

        r = client.Post("/api/v1/trace", "not json", "application/json");
        REQUIRE(r);
        CHECK(r->status == 400);

        r = client.Get("/api/v1/jobs/ffffffffffffffff");
        REQUIRE(r);
        CHECK(r->status == 404);
        r = client.Get("/api/v1/jobs/ffffffffffffffff/result");
        REQUIRE(r);
        CHECK(r->status == 404);
    }
    SECTION("failed trace reports through status and result") {
        json bad = body;
        bad["commit"] = "0123456789abcdef0123456789abcdef01234567";
        auto posted = client.Post("/api/v1/trace", bad.dump(), "application/json");
        REQUIRE(posted);
        REQUIRE(posted->status == 202);
        const auto id = json::parse(posted->body)["job_id"].get<std::string>();
        const auto result = poll_result(client, id);
        CHECK(json::parse(result)["error"] == "UnknownCommit");
        auto r = client.Get("/api/v1/jobs/" + id + "/result");
        REQUIRE(r);
        CHECK(r->status == 422);
        auto status = client.Get("/api/v1/jobs/" + id);
        CHECK(json::parse(status->body)["error"]["error"] == "UnknownCommit");
    }
    SECTION("diff of a recorded commit") {
        const auto head = built.truth.expected.front().commit.str();
        httplib::Params params{{"repo", built.repo.string()}, {"commit", head}, {"file", loc.file}};
        auto r = client.Get("/api/v1/diff", params, httplib::Headers{});
        REQUIRE(r);
        CHECK(r->status == 200);
        CHECK(r->get_header_value("Content-Type").find("text/x-diff") == 0);
        CHECK(r->body.find("\n-            total += values[i] * ") != std::string::npos);
        CHECK(r->body.find("\n+            total += values[i] * ") != std::string::npos);

        params = {{"repo", built.repo.string()}, {"commit", head}, {"file", "Nope.java"}};
        r = client.Get("/api/v1/diff", params, httplib::Headers{});
        REQUIRE(r);
        CHECK(r->status == 404);
        CHECK(json::parse(r->body)["error"] == "FileAbsentAtCommit");

        params = {{"repo", built.repo.string()}, {"commit", std::string(40, 'e')}, {"file", loc.file}};
        r = client.Get("/api/v1/diff", params, httplib::Headers{});
        REQUIRE(r);
        CHECK(r->status == 404);

        r = client.Get("/api/v1/diff?repo=x");
        REQUIRE(r);
        CHECK(r->status == 400);
    }
    SECTION("root answers") {
        auto r = client.Get("/");
        REQUIRE(r);
        CHECK(r->status == 200);
    }
}

TEST_CASE("http queue limit and pending results") {
    TempDir tmp;
    Gate gate;
    TraceService svc(small_config(1, 1, tmp / "cache"), gate.runner());
    RunningServer server(svc);
    auto client = server.client();
    auto post = [&](int line) {
        json body{{"repo", "r"}, {"commit", "HEAD"}, {"file", "A.java"}, {"method", "f"}, {"line", line}};
        return client.Post("/api/v1/trace", body.dump(), "application/json");
    };
    auto first = post(1);
    REQUIRE(first);
    CHECK(first->status == 202);
    const auto id = json::parse(first->body)["job_id"].get<std::string>();
    auto second = post(2);
    REQUIRE(second);
    CHECK(second->status == 429);
    CHECK(json::parse(second->body)["error"] == "QueueFull");
    auto same = post(1);
    REQUIRE(same);
    CHECK(same->status == 202);
    CHECK(json::parse(same->body)["job_id"] == id);

    auto pending = client.Get("/api/v1/jobs/" + id + "/result");
    REQUIRE(pending);
    CHECK(pending->status == 409);

    gate.release();
    CHECK(poll_result(client, id) == "{\"line\": 1}\n");
}
