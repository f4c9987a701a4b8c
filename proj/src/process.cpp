#include "mtrail/process.hpp"

#include "mtrail/error.hpp"

#include <boost/asio.hpp>
#include <boost/process.hpp>

#include <future>
#include <istream>
#include <ostream>

namespace bp = boost::process;

namespace mtrail {

ProcessResult run_process(const std::string& program, const std::vector<std::string>& args,
                          const ProcessOptions& options) {
    auto exe = program.find('/') != std::string::npos ? boost::filesystem::path(program) : bp::search_path(program);
    if (exe.empty()) {
        throw Error(ErrorCode::ProcessFailed, "executable not found on PATH: " + program);
    }

    bp::environment env = boost::this_process::environment();
    for (const auto& [key, value] : options.env) {
        env[key] = value;
    }

    boost::asio::io_context ios;
    std::future<std::string> out;
    std::future<std::string> err;
    const auto cwd = options.cwd.empty() ? std::filesystem::current_path() : options.cwd;

    ProcessResult result;
    try {
        bp::child child(exe, bp::args(args), bp::start_dir(cwd.string()), env,
                        bp::std_in < boost::asio::buffer(options.stdin_data),
                        bp::std_out > out, bp::std_err > err, ios);
        ios.run();
        child.wait();
        result.exit_code = child.exit_code();
    } catch (const bp::process_error& e) {
        throw Error(ErrorCode::ProcessFailed, program + ": " + e.what());
    }
    result.out = out.get();
    result.err = err.get();
    return result;
}

ProcessResult run_git(const std::filesystem::path& repo_dir, const std::vector<std::string>& args,
                      const std::string& stdin_data, const std::map<std::string, std::string>& env) {
    ProcessOptions options;
    options.cwd = repo_dir;
    options.stdin_data = stdin_data;
    options.env = env;
    options.env["LC_ALL"] = "C";
    options.env["GIT_TERMINAL_PROMPT"] = "0";
    options.env["GIT_CONFIG_NOSYSTEM"] = "1";
    std::vector<std::string> full{"-c", "core.quotepath=off", "-c", "safe.directory=*"};
    full.insert(full.end(), args.begin(), args.end());
    return run_process("git", full, options);
}

struct BlobReader::Impl {
    bp::opstream in;
    bp::ipstream out;
    bp::child child;

    explicit Impl(const std::filesystem::path& repo_dir)
        : child(bp::search_path("git"),
                bp::args({"-c", "safe.directory=*", "cat-file", "--batch"}),
                bp::start_dir(repo_dir.string()), bp::std_in < in, bp::std_out > out,
                bp::std_err > bp::null) {}
};

BlobReader::BlobReader(std::filesystem::path repo_dir) {
    try {
        impl_ = std::make_unique<Impl>(repo_dir);
    } catch (const bp::process_error& e) {
        throw Error(ErrorCode::ProcessFailed, std::string("git cat-file: ") + e.what());
    }
}

BlobReader::~BlobReader() {
    if (!impl_) {
        return;
    }
    impl_->in.pipe().close();
    std::error_code ec;
    impl_->child.wait(ec);
}

std::optional<BlobReader::Object> BlobReader::read(const std::string& spec) {
    if (spec.find('\n') != std::string::npos) {
        return std::nullopt;
    }
    impl_->in << spec << '\n' << std::flush;
    std::string header;
    if (!std::getline(impl_->out, header)) {
        throw Error(ErrorCode::ProcessFailed, "git cat-file terminated unexpectedly");
    }
    // "<oid> <type> <size>" or "<spec> missing" / "<spec> ambiguous"
    const auto last_space = header.rfind(' ');
    if (last_space == std::string::npos) {
        return std::nullopt;
    }
    const auto tail = header.substr(last_space + 1);
    if (tail == "missing" || tail == "ambiguous") {
        return std::nullopt;
    }
    const auto first_space = header.find(' ');
    Object object;
    object.oid = header.substr(0, first_space);
    object.type = header.substr(first_space + 1, last_space - first_space - 1);
    const auto size = static_cast<std::size_t>(std::stoull(tail));
    object.content.resize(size);
    impl_->out.read(object.content.data(), static_cast<std::streamsize>(size));
    impl_->out.get();  // trailing LF
    return object;
}

}  // namespace mtrail
