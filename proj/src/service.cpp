#include "mtrail/service.hpp"

#include "mtrail/error.hpp"
#include "mtrail/history_json.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <random>

namespace fs = std::filesystem;

namespace mtrail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string TraceRequest::key() const {
    ordered_json j;
    j["repo"] = repo;
    j["commit"] = commit;
    j["file"] = file;
    j["method"] = method;
    j["line"] = line;
    const auto echo = echo_config(config);
    j["threshold_same"] = echo.threshold_same;
    j["threshold_cross"] = echo.threshold_cross;
    j["include_formatting"] = echo.include_formatting;
    j["include_javadoc"] = echo.include_javadoc;
    j["include_annotations"] = echo.include_annotations;
    j["max_commits"] = echo.max_commits ? ordered_json(*echo.max_commits) : ordered_json(nullptr);
    return j.dump();
}

TraceRequest parse_trace_request(std::string_view json_text) {
    json body;
    try {
        body = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("body: not valid JSON (") + e.what() + ")");
    }
    if (!body.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "body: must be a JSON object");
    }
    std::vector<std::string> problems;
    TraceRequest request;
    auto text_field = [&](const char* name, std::string& out) {
        auto it = body.find(name);
        if (it == body.end()) {
            problems.push_back(std::string(name) + ": required");
        } else if (!it->is_string() || it->get<std::string>().empty()) {
            problems.push_back(std::string(name) + ": must be a non-empty string");
        } else {
            out = it->get<std::string>();
        }
    };
    text_field("repo", request.repo);
    text_field("commit", request.commit);
    text_field("file", request.file);
    text_field("method", request.method);
    if (auto it = body.find("line"); it == body.end()) {
        problems.push_back("line: required");
    } else if (!it->is_number_integer() || it->get<std::int64_t>() < 1 || it->get<std::int64_t>() > 1 << 30) {
        problems.push_back("line: must be an integer >= 1");
    } else {
        request.line = it->get<int>();
    }

    if (auto it = body.find("config"); it != body.end() && !it->is_null()) {
        if (!it->is_object()) {
            problems.push_back("config: must be an object");
        } else {
            const auto& c = *it;
            auto number = [&](const char* name, double& out) {
                if (auto f = c.find(name); f != c.end()) {
                    if (f->is_number()) {
                        out = f->get<double>();
                    } else {
                        problems.push_back(std::string("config.") + name + ": must be a number");
                    }
                }
            };
            auto flag = [&](const char* name, bool& out) {
                if (auto f = c.find(name); f != c.end()) {
                    if (f->is_boolean()) {
                        out = f->get<bool>();
                    } else {
                        problems.push_back(std::string("config.") + name + ": must be a boolean");
                    }
                }
            };
            number("threshold_same", request.config.thresholds.same_file);
            number("threshold_cross", request.config.thresholds.cross_file);
            flag("include_formatting", request.config.include_formatting);
            flag("include_javadoc", request.config.include_javadoc);
            flag("include_annotations", request.config.include_annotations);
            if (auto f = c.find("max_commits"); f != c.end() && !f->is_null()) {
                if (f->is_number_unsigned() && f->get<std::uint64_t>() > 0) {
                    request.config.max_commits = f->get<std::size_t>();
                } else {
                    problems.push_back("config.max_commits: must be a positive integer");
                }
            }
            try {
                request.config.thresholds.validate();
            } catch (const Error& e) {
                problems.push_back(std::string("config: ") + e.what());
            }
        }
    }
    if (!problems.empty()) {
        std::string message;
        for (const auto& p : problems) {
            message += (message.empty() ? "" : "; ") + p;
        }
        throw Error(ErrorCode::InvalidArgument, message);
    }
    return request;
}

fs::path default_cache_dir() {
    if (const char* env = std::getenv("HF_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return fs::temp_directory_path() / "mtrail-cache";
}

std::string run_trace(const TraceRequest& request, const fs::path& cache_dir, const std::function<void()>& on_tracing) {
    request.config.thresholds.validate();
    auto repo = open_repository(request.repo, cache_dir);
    if (on_tracing) {
        on_tracing();
    }
    Tracer tracer(repo, request.config, std::make_shared<ParseCache>());
    const auto history = tracer.trace({CommitId(request.commit), request.file, request.method, request.line});
    return serialize(history, request.repo, request.config);
}

std::string_view to_string(JobState state) noexcept {
    switch (state) {
    case JobState::Queued: return "Queued";
    case JobState::Cloning: return "Cloning";
    case JobState::Tracing: return "Tracing";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
    }
    return "Unknown";
}

namespace {

std::size_t env_size(const char* name, std::size_t fallback) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') {
        return fallback;
    }
    try {
        const auto parsed = std::stoul(value);
        return parsed > 0 ? parsed : fallback;
    } catch (const std::exception&) {
        return fallback;
    }
}

std::string now_utc() {
    return format_utc(std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count());
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

ServiceConfig service_config_from_env() {
    ServiceConfig config;
    config.workers = env_size("HF_WORKERS", config.workers);
    config.queue_capacity = env_size("HF_QUEUE_CAP", config.queue_capacity);
    config.cache_dir = default_cache_dir();
    return config;
}

TraceService::TraceService(ServiceConfig config, TraceRunner runner)
    : config_(std::move(config)), runner_(std::move(runner)) {
    if (!runner_) {
        runner_ = [dir = config_.cache_dir](const TraceRequest& request, const std::function<void()>& on_tracing) {
            return run_trace(request, dir, on_tracing);
        };
    }
    id_salt_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
    const auto n = std::max<std::size_t>(1, config_.workers);
    for (std::size_t i = 0; i < n; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

TraceService::~TraceService() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    work_ready_.notify_all();
    for (auto& t : workers_) {
        t.join();
    }
}

TraceService::Submission TraceService::submit(TraceRequest request) {
    std::unique_lock lock(mutex_);
    const auto key = request.key();
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
        return {Admission::Coalesced, it->second};
    }
    if (in_flight_.size() >= config_.queue_capacity) {
        return {Admission::QueueFull, {}};
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix(id_salt_ + ++sequence_)));
    Job job;
    job.key = key;
    job.snapshot.id = buf;
    job.snapshot.request = std::move(request);
    job.snapshot.submitted_at = now_utc();
    job.snapshot.transitions.push_back(JobState::Queued);
    const std::string id = job.snapshot.id;
    jobs_.emplace(id, std::move(job));
    in_flight_.emplace(key, id);
    queue_.push_back(id);
    lock.unlock();
    work_ready_.notify_one();
    return {Admission::Accepted, id};
}

std::optional<JobSnapshot> TraceService::job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return std::nullopt;
    }
    return it->second.snapshot;
}

std::optional<JobSnapshot> TraceService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, timeout, [&] {
        auto it = jobs_.find(id);
        return it == jobs_.end() || it->second.snapshot.state == JobState::Done ||
               it->second.snapshot.state == JobState::Failed;
    });
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return std::nullopt;
    }
    return it->second.snapshot;
}

void TraceService::advance(Job& job, JobState state) {
    // States only move forward; a runner reporting late is ignored.
    if (state > job.snapshot.state) {
        job.snapshot.state = state;
        job.snapshot.transitions.push_back(state);
    }
}

void TraceService::finish(const std::string& id, JobState state, std::string result, std::string error_code) {
    {
        std::lock_guard lock(mutex_);
        auto& job = jobs_.at(id);
        if (state == JobState::Done) {
            advance(job, JobState::Tracing);
        }
        advance(job, state);
        job.snapshot.result = std::move(result);
        job.snapshot.error_code = std::move(error_code);
        job.snapshot.finished_at = now_utc();
        in_flight_.erase(job.key);
        --active_;
    }
    changed_.notify_all();
}

void TraceService::worker_loop() {
    for (;;) {
        std::string id;
        TraceRequest request;
        {
            std::unique_lock lock(mutex_);
            work_ready_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) {
                return;
            }
            id = queue_.front();
            queue_.pop_front();
            ++active_;
            auto& job = jobs_.at(id);
            advance(job, JobState::Cloning);
            request = job.snapshot.request;
        }
        changed_.notify_all();

        auto on_tracing = [this, &id] {
            {
                std::lock_guard lock(mutex_);
                advance(jobs_.at(id), JobState::Tracing);
            }
            changed_.notify_all();
        };
        try {
            auto document = runner_(request, on_tracing);
            finish(id, JobState::Done, std::move(document), {});
        } catch (const Error& e) {
            const auto code = std::string(to_string(e.code()));
            finish(id, JobState::Failed, error_document(code, e.what()), code);
        } catch (const std::exception& e) {
            finish(id, JobState::Failed, error_document("InternalError", e.what()), "InternalError");
        }
    }
}

std::string TraceService::diff(const std::string& repo_source, const std::string& commit, const std::string& parent,
                               const std::string& file) const {
    auto repo = open_repository(repo_source, config_.cache_dir);
    const auto child = repo.resolve_commit(commit);
    std::optional<CommitId> base;
    if (!parent.empty()) {
        base = repo.resolve_commit(parent).id;
    } else if (!child.parents.empty()) {
        base = child.parents.front();
    }
    const bool in_child = repo.read_blob(child.id, file).has_value();
    const bool in_base = base && repo.read_blob(*base, file).has_value();
    if (!in_child && !in_base) {
        throw Error(ErrorCode::FileAbsentAtCommit, file + " exists at neither commit");
    }
    return repo.unified_diff(child.id, base, file);
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

struct HttpFrontend::Impl {
    TraceService& service;
    httplib::Server server;

    explicit Impl(TraceService& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    send_json(res, status, error_document(code, message));
}

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownCommit:
    case ErrorCode::FileAbsentAtCommit:
    case ErrorCode::NotARepository:
    case ErrorCode::CloneFailed:
        return 404;
    default:
        return 400;
    }
}

std::string status_json(const JobSnapshot& job) {
    ordered_json j;
    j["job_id"] = job.id;
    j["state"] = std::string(to_string(job.state));
    auto transitions = ordered_json::array();
    for (const auto s : job.transitions) {
        transitions.push_back(std::string(to_string(s)));
    }
    j["transitions"] = std::move(transitions);
    j["submitted_at"] = job.submitted_at;
    j["finished_at"] = job.finished_at ? ordered_json(*job.finished_at) : ordered_json(nullptr);
    j["error"] = job.state == JobState::Failed ? ordered_json::parse(job.result) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

}  // namespace

HttpFrontend::HttpFrontend(TraceService& service, fs::path static_dir) : impl_(std::make_unique<Impl>(service)) {
    auto& server = impl_->server;
    auto& svc = impl_->service;

    server.Post("/api/v1/trace", [&svc](const httplib::Request& req, httplib::Response& res) {
        TraceRequest request;
        try {
            request = parse_trace_request(req.body);
        } catch (const Error& e) {
            send_error(res, 400, to_string(e.code()), e.what());
            return;
        }
        const auto submission = svc.submit(std::move(request));
        if (submission.admission == TraceService::Admission::QueueFull) {
            send_error(res, 429, "QueueFull", "too many jobs in flight");
            return;
        }
        ordered_json j;
        j["job_id"] = submission.job_id;
        send_json(res, 202, j.dump() + "\n");
    });

    server.Get(R"(/api/v1/jobs/([0-9A-Za-z]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        const auto job = svc.job(req.matches[1]);
        if (!job) {
            send_error(res, 404, "UnknownJob", "no job with that id");
            return;
        }
        send_json(res, 200, status_json(*job));
    });

    server.Get(R"(/api/v1/jobs/([0-9A-Za-z]+)/result)", [&svc](const httplib::Request& req, httplib::Response& res) {
        const auto job = svc.job(req.matches[1]);
        if (!job) {
            send_error(res, 404, "UnknownJob", "no job with that id");
        } else if (job->state == JobState::Done) {
            send_json(res, 200, job->result);
        } else if (job->state == JobState::Failed) {
            send_json(res, 422, job->result);
        } else {
            send_error(res, 409, "NotReady", std::string("job is ") + std::string(to_string(job->state)));
        }
    });

    server.Get("/api/v1/diff", [&svc](const httplib::Request& req, httplib::Response& res) {
        for (const char* name : {"repo", "commit", "file"}) {
            if (!req.has_param(name) || req.get_param_value(name).empty()) {
                send_error(res, 400, "InvalidArgument", std::string(name) + ": required");
                return;
            }
        }
        try {
            const auto text = svc.diff(req.get_param_value("repo"), req.get_param_value("commit"),
                                       req.get_param_value("parent"), req.get_param_value("file"));
            res.status = 200;
            res.set_content(text, "text/x-diff; charset=utf-8");
        } catch (const Error& e) {
            send_error(res, status_for(e.code()), to_string(e.code()), e.what());
        }
    });

    std::error_code ec;
    if (!static_dir.empty() && fs::is_directory(static_dir, ec)) {
        server.set_mount_point("/", static_dir.string());
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("mtrail trace service; see /api/v1\n", "text/plain");
        });
    }
}

HttpFrontend::~HttpFrontend() {
    stop();
}

int HttpFrontend::bind(const std::string& host, int port) {
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpFrontend::serve() {
    impl_->server.listen_after_bind();
}

void HttpFrontend::stop() {
    impl_->server.stop();
}

}  // namespace mtrail
