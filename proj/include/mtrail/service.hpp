#pragma once

#include "mtrail/tracer.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mtrail {

/// Input of one trace, shared by the CLI and the HTTP service.
struct TraceRequest {
    std::string repo;
    std::string commit;
    std::string file;
    std::string method;
    int line = 0;
    TracerConfig config;

    /// Canonical JSON used to coalesce identical requests.
    [[nodiscard]] std::string key() const;
};

/// Parses a POST body. Throws Error(InvalidArgument) whose message lists
/// every offending field as "field: reason".
TraceRequest parse_trace_request(std::string_view json_text);

/// Opens (or clones) the repository, traces and serializes. This is exactly
/// what the CLI prints, so service results are byte-identical to it.
std::string run_trace(const TraceRequest& request, const std::filesystem::path& cache_dir,
                      const std::function<void()>& on_tracing = {});

/// Default clone cache: $HF_CACHE_DIR, else <tmp>/mtrail-cache.
std::filesystem::path default_cache_dir();

enum class JobState { Queued, Cloning, Tracing, Done, Failed };

std::string_view to_string(JobState state) noexcept;

struct JobSnapshot {
    std::string id;
    TraceRequest request;
    JobState state = JobState::Queued;
    std::vector<JobState> transitions;  ///< every state entered, in order
    std::string result;                 ///< HistoryDocument JSON or error JSON
    std::string error_code;             ///< set when Failed
    std::string submitted_at;
    std::optional<std::string> finished_at;
};

struct ServiceConfig {
    std::size_t workers = 4;
    std::size_t queue_capacity = 32;  ///< jobs that are queued or running
    std::filesystem::path cache_dir = default_cache_dir();
};

/// Reads HF_WORKERS, HF_QUEUE_CAP and HF_CACHE_DIR over the defaults.
ServiceConfig service_config_from_env();

/// Runs one job. `on_tracing` must be called once the repository is open.
/// Returns the document text; failures are reported by throwing Error.
using TraceRunner = std::function<std::string(const TraceRequest&, const std::function<void()>& on_tracing)>;

/// Asynchronous job table with a bounded worker pool.
class TraceService {
public:
    explicit TraceService(ServiceConfig config, TraceRunner runner = {});
    ~TraceService();
    TraceService(const TraceService&) = delete;
    TraceService& operator=(const TraceService&) = delete;

    enum class Admission { Accepted, Coalesced, QueueFull };

    struct Submission {
        Admission admission = Admission::Accepted;
        std::string job_id;  ///< empty when QueueFull
    };

    Submission submit(TraceRequest request);

    [[nodiscard]] std::optional<JobSnapshot> job(const std::string& id) const;

    /// Blocks until the job is Done or Failed or the timeout passes.
    std::optional<JobSnapshot> wait(const std::string& id, std::chrono::milliseconds timeout) const;

    /// Unified diff of `file` between `parent` (first parent when empty) and
    /// `commit`. Throws Error(UnknownCommit) or Error(FileAbsentAtCommit).
    std::string diff(const std::string& repo, const std::string& commit, const std::string& parent,
                     const std::string& file) const;

    [[nodiscard]] const ServiceConfig& config() const noexcept { return config_; }

private:
    struct Job {
        JobSnapshot snapshot;
        std::string key;
    };

    void worker_loop();
    void advance(Job& job, JobState state);
    void finish(const std::string& id, JobState state, std::string result, std::string error_code);

    ServiceConfig config_;
    TraceRunner runner_;

    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::condition_variable work_ready_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, std::string> in_flight_;  ///< request key -> job id
    std::deque<std::string> queue_;
    std::size_t active_ = 0;
    std::uint64_t sequence_ = 0;
    std::uint64_t id_salt_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// HTTP front end: the /api/v1 routes plus static files from `static_dir`.
class HttpFrontend {
public:
    HttpFrontend(TraceService& service, std::filesystem::path static_dir = {});
    ~HttpFrontend();

    /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mtrail
