#include "mtrail/fixture_forge.hpp"

#include "mtrail/error.hpp"
#include "mtrail/process.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mtrail {

std::string_view to_string(StepKind kind) noexcept {
    switch (kind) {
    case StepKind::InitFile: return "InitFile";
    case StepKind::EditBody: return "EditBody";
    case StepKind::RenameMethod: return "RenameMethod";
    case StepKind::ChangeParams: return "ChangeParams";
    case StepKind::MoveMethodToFile: return "MoveMethodToFile";
    case StepKind::RenameFile: return "RenameFile";
    case StepKind::AddOverload: return "AddOverload";
    case StepKind::MergeBranches: return "MergeBranches";
    case StepKind::FormatOnly: return "FormatOnly";
    case StepKind::EditJavadoc: return "EditJavadoc";
    case StepKind::EditAnnotation: return "EditAnnotation";
    case StepKind::TouchOtherFile: return "TouchOtherFile";
    }
    return "Unknown";
}

std::string_view to_string(MergeResolution resolution) noexcept {
    switch (resolution) {
    case MergeResolution::TakeOurs: return "TakeOurs";
    case MergeResolution::TakeTheirs: return "TakeTheirs";
    case MergeResolution::EditedResolution: return "EditedResolution";
    }
    return "Unknown";
}

namespace {

constexpr int kTargetId = 1;

struct MethodModel {
    int id = 0;
    std::string javadoc;  // one sentence, empty for none
    std::vector<std::string> annotations;
    std::string modifiers;
    std::string return_type;
    std::string name;
    std::vector<std::string> params;
    std::vector<std::string> body;  // lines relative to the body indent
    bool alt_format = false;
};

struct FileModel {
    std::string class_name;
    std::vector<MethodModel> methods;
};

using Tree = std::map<std::string, FileModel>;

std::string render(const FileModel& file, int* target_line) {
    std::ostringstream out;
    int line = 1;
    auto emit = [&](const std::string& text) {
        out << text << '\n';
        ++line;
    };
    emit("public class " + file.class_name + " {");
    for (const auto& m : file.methods) {
        emit("");
        if (!m.javadoc.empty()) {
            emit("    /**");
            emit("     * " + m.javadoc);
            emit("     */");
        }
        if (m.id == kTargetId && target_line != nullptr) {
            *target_line = line;
        }
        for (const auto& a : m.annotations) {
            emit("    " + a);
        }
        std::string header = "    ";
        if (!m.modifiers.empty()) {
            header += m.modifiers + " ";
        }
        header += m.return_type + " " + m.name + "(";
        for (std::size_t i = 0; i < m.params.size(); ++i) {
            header += (i ? ", " : "") + m.params[i];
        }
        emit(header + ") {");
        const std::string indent = m.alt_format ? "            " : "        ";
        for (const auto& b : m.body) {
            emit(indent + b);
        }
        emit("    }");
    }
    emit("}");
    return out.str();
}

MethodModel target_method(int multiplier) {
    MethodModel m;
    m.id = kTargetId;
    m.javadoc = "Returns the weighted total of the values.";
    m.modifiers = "public";
    m.return_type = "int";
    m.name = "computeTotal";
    m.params = {"int[] values"};
    m.body = {
        "int total = 0;",
        "for (int i = 0; i < values.length; i++) {",
        "    total += values[i] * " + std::to_string(multiplier) + ";",
        "}",
        "if (total > 1000) {",
        "    total = total % 997;",
        "}",
        "return total;",
    };
    return m;
}

MethodModel describe_helper() {
    MethodModel m;
    m.id = 2;
    m.return_type = "String";
    m.name = "describe";
    m.params = {"String label"};
    m.body = {
        "StringBuilder out = new StringBuilder(label);",
        "out.append(':').append(label.length());",
        "return out.reverse().toString();",
    };
    return m;
}

MethodModel blank_helper() {
    MethodModel m;
    m.id = 3;
    m.modifiers = "static";
    m.return_type = "boolean";
    m.name = "isBlank";
    m.params = {"String text"};
    m.body = {"return text == null || text.trim().isEmpty();"};
    return m;
}

MethodModel clamp_helper() {
    MethodModel m;
    m.id = 4;
    m.modifiers = "static";
    m.return_type = "int";
    m.name = "clamp";
    m.params = {"int v", "int lo", "int hi"};
    m.body = {"return Math.max(lo, Math.min(hi, v));"};
    return m;
}

MethodModel overload_of(const MethodModel& target, int id) {
    MethodModel m;
    m.id = id;
    m.modifiers = "final";
    m.return_type = "long";
    m.name = target.name;
    m.params = {"String csv"};
    m.body = {
        "long sum = 0L;",
        "for (String part : csv.split(\",\")) {",
        "    sum += Long.parseLong(part.trim());",
        "}",
        "return sum;",
    };
    return m;
}

struct Located {
    std::string path;
    std::size_t index = 0;
};

std::optional<Located> locate(const Tree& tree, int id) {
    for (const auto& [path, file] : tree) {
        for (std::size_t i = 0; i < file.methods.size(); ++i) {
            if (file.methods[i].id == id) {
                return Located{path, i};
            }
        }
    }
    return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error(ErrorCode::ProcessFailed, "cannot write " + path.string());
    }
}

class Forge {
public:
    explicit Forge(fs::path repo) : repo_(std::move(repo)) {}

    BuiltScenario run(const std::vector<ScenarioStep>& steps) {
        if (steps.empty() || steps.front().kind != StepKind::InitFile) {
            throw Error(ErrorCode::StepInvalid, "the first step must be InitFile");
        }
        git({"init", "-q", "-b", "main"});
        git({"config", "user.name", "Fixture Forge"});
        git({"config", "user.email", "forge@example.com"});
        git({"config", "commit.gpgsign", "false"});

        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (i > 0 && steps[i].kind == StepKind::InitFile) {
                throw Error(ErrorCode::StepInvalid, "InitFile may only appear first");
            }
            step_time_ = kForgeEpoch + 60 * static_cast<std::int64_t>(i);
            apply(steps[i]);
        }
        const auto where = locate(tree_, target_id_);
        if (!where) {
            throw Error(ErrorCode::StepInvalid, "the traced method never appears");
        }
        int line = 0;
        render(tree_.at(where->path), &line);

        BuiltScenario built;
        built.repo = repo_;
        built.truth.locator = {head(), where->path, tree_.at(where->path).methods[where->index].name, line};
        built.truth.expected = std::move(truth_);
        std::stable_sort(built.truth.expected.begin(), built.truth.expected.end(),
                         [](const ExpectedRecord& a, const ExpectedRecord& b) { return a.commit_time > b.commit_time; });
        return built;
    }

private:
    std::string git(const std::vector<std::string>& args, bool allow_failure = false) {
        const auto stamp = "@" + std::to_string(commit_time_) + " +0000";
        const std::map<std::string, std::string> env{
            {"GIT_AUTHOR_NAME", "Fixture Forge"},     {"GIT_AUTHOR_EMAIL", "forge@example.com"},
            {"GIT_COMMITTER_NAME", "Fixture Forge"},  {"GIT_COMMITTER_EMAIL", "forge@example.com"},
            {"GIT_AUTHOR_DATE", stamp},               {"GIT_COMMITTER_DATE", stamp},
        };
        auto result = run_git(repo_, args, {}, env);
        if (!result.ok() && !allow_failure) {
            std::string joined;
            for (const auto& a : args) {
                joined += " " + a;
            }
            throw Error(ErrorCode::ProcessFailed, "git" + joined + " failed: " + result.err);
        }
        return result.out;
    }

    CommitId head() {
        auto out = git({"rev-parse", "HEAD"});
        while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) {
            out.pop_back();
        }
        return CommitId(out);
    }

    void sync_worktree() {
        for (const auto& path : written_) {
            if (!tree_.count(path)) {
                fs::remove(repo_ / path);
            }
        }
        written_.clear();
        for (const auto& [path, file] : tree_) {
            write_text(repo_ / path, render(file, nullptr));
            written_.insert(path);
        }
    }

    CommitId commit(const std::string& message, std::int64_t offset = 0) {
        commit_time_ = step_time_ + offset;
        sync_worktree();
        git({"add", "-A"});
        git({"commit", "-q", "--allow-empty", "-m", message});
        return head();
    }

    void expect(const CommitId& id, ChangeKinds kinds) {
        truth_.push_back({id, commit_time_, std::move(kinds)});
    }

    MethodModel& target(std::string_view why) {
        const auto where = locate(tree_, target_id_);
        if (!where) {
            throw Error(ErrorCode::StepInvalid, std::string(why) + " needs the traced method to exist");
        }
        return tree_.at(where->path).methods[where->index];
    }

    std::string target_path() {
        return locate(tree_, target_id_)->path;
    }

    int next_constant() { return ++constant_; }

    void edit_body(MethodModel& m, const std::string& text) {
        if (!text.empty()) {
            m.body.insert(m.body.end() - 1, text);
            return;
        }
        for (auto& line : m.body) {
            const auto star = line.find("] * ");
            if (star != std::string::npos) {
                line = line.substr(0, star + 4) + std::to_string(next_constant()) + ";";
                return;
            }
        }
        m.body.insert(m.body.end() - 1, "assert " + std::to_string(next_constant()) + " > 0;");
    }

    /// Edits some method other than the target, preferring the target's file.
    void edit_bystander() {
        const auto where = locate(tree_, target_id_);
        if (where) {
            for (auto& m : tree_.at(where->path).methods) {
                if (m.id != target_id_ && m.id != kTargetId) {
                    edit_helper(m);
                    return;
                }
            }
        }
        edit_helper(tree_.at("Util.java").methods.front());
    }

    void edit_helper(MethodModel& m) {
        m.body.insert(m.body.begin(), "// revision " + std::to_string(next_constant()));
    }

    std::string fresh_name(const std::string& stem) {
        const int n = ++names_[stem];
        return n == 1 ? stem : stem + std::to_string(n);
    }

    void apply(const ScenarioStep& step) {
        switch (step.kind) {
        case StepKind::InitFile: init(step); break;
        case StepKind::EditBody: {
            auto& m = target("EditBody");
            edit_body(m, step.text);
            expect(commit("Edit body of " + m.name), {ChangeKind::BodyChange});
            break;
        }
        case StepKind::RenameMethod: {
            auto& m = target("RenameMethod");
            const auto old_name = m.name;
            m.name = step.text.empty() ? fresh_name("weightedSum") : step.text;
            if (m.name == old_name) {
                throw Error(ErrorCode::StepInvalid, "RenameMethod must change the name");
            }
            expect(commit("Rename " + old_name + " to " + m.name), {ChangeKind::Rename, ChangeKind::SignatureChange});
            break;
        }
        case StepKind::ChangeParams: {
            auto& m = target("ChangeParams");
            m.params.push_back(step.text.empty() ? "int scale" + std::to_string(next_constant()) : step.text);
            expect(commit("Add a parameter to " + m.name), {ChangeKind::ParameterChange, ChangeKind::SignatureChange});
            break;
        }
        case StepKind::MoveMethodToFile: {
            target("MoveMethodToFile");
            const auto from = target_path();
            auto& methods = tree_.at(from).methods;
            auto it = std::find_if(methods.begin(), methods.end(), [&](const MethodModel& m) { return m.id == target_id_; });
            MethodModel moved = *it;
            methods.erase(it);
            const auto cls = step.text.empty() ? fresh_name("Other") : step.text;
            auto& dest = tree_[cls + ".java"];
            dest.class_name = cls;
            dest.methods.push_back(moved);
            expect(commit("Move " + moved.name + " to " + cls), {ChangeKind::MethodMove});
            break;
        }
        case StepKind::RenameFile: {
            target("RenameFile");
            const auto from = target_path();
            auto file = tree_.at(from);
            const auto cls = step.text.empty() ? fresh_name("Renamed") : step.text;
            if (tree_.count(cls + ".java")) {
                throw Error(ErrorCode::StepInvalid, cls + ".java already exists");
            }
            tree_.erase(from);
            file.class_name = cls;
            tree_[cls + ".java"] = std::move(file);
            expect(commit("Rename " + from + " to " + cls + ".java"), {ChangeKind::FileRename});
            break;
        }
        case StepKind::AddOverload: {
            const auto original = target("AddOverload");
            const auto path = target_path();
            const int id = 100 + next_constant();
            auto overload = overload_of(original, id);
            auto& methods = tree_.at(path).methods;
            const auto pos = std::find_if(methods.begin(), methods.end(),
                                          [&](const MethodModel& x) { return x.id == target_id_; });
            methods.insert(pos + 1, std::move(overload));
            const auto id_commit = commit("Add an overload of " + original.name);
            if (step.variant == "retarget") {
                // The traced method becomes the overload, which is new here.
                truth_.clear();
                for (auto& x : tree_.at(path).methods) {
                    if (x.id == target_id_) {
                        x.id = 5;
                    }
                }
                for (auto& x : tree_.at(path).methods) {
                    if (x.id == id) {
                        x.id = kTargetId;
                    }
                }
                expect(id_commit, {ChangeKind::Introduced});
            } else if (!step.variant.empty()) {
                throw Error(ErrorCode::StepInvalid, "unknown AddOverload variant " + step.variant);
            }
            break;
        }
        case StepKind::MergeBranches: merge(step); break;
        case StepKind::FormatOnly: {
            auto& m = target("FormatOnly");
            m.alt_format = !m.alt_format;
            expect(commit("Reindent " + m.name), {ChangeKind::FormattingChange});
            break;
        }
        case StepKind::EditJavadoc: {
            auto& m = target("EditJavadoc");
            m.javadoc = step.text.empty() ? "Sums the values after weighting, revision " +
                                                std::to_string(next_constant()) + "."
                                          : step.text;
            expect(commit("Document " + m.name), {ChangeKind::JavadocChange});
            break;
        }
        case StepKind::EditAnnotation: {
            auto& m = target("EditAnnotation");
            if (!step.text.empty()) {
                m.annotations.push_back(step.text);
            } else if (m.annotations.empty()) {
                m.annotations.push_back("@Deprecated");
            } else {
                m.annotations.push_back("@SuppressWarnings(\"w" + std::to_string(next_constant()) + "\")");
            }
            expect(commit("Annotate " + m.name), {ChangeKind::AnnotationChange});
            break;
        }
        case StepKind::TouchOtherFile:
            edit_helper(tree_.at("Util.java").methods.front());
            commit("Touch Util");
            break;
        }
    }

    void init(const ScenarioStep& step) {
        auto& main = tree_["Main.java"];
        main.class_name = "Main";
        if (step.variant.empty()) {
            main.methods.push_back(target_method(next_constant()));
        } else if (step.variant != "deferred") {
            throw Error(ErrorCode::StepInvalid, "unknown InitFile variant " + step.variant);
        }
        main.methods.push_back(describe_helper());
        main.methods.push_back(blank_helper());
        auto& util = tree_["Util.java"];
        util.class_name = "Util";
        util.methods.push_back(clamp_helper());
        const auto id = commit("Initial import");
        if (step.variant.empty()) {
            expect(id, {ChangeKind::Introduced});
        }
    }

    void merge(const ScenarioStep& step) {
        const bool dual = step.variant == "dual-introduction";
        if (!dual && !step.variant.empty()) {
            throw Error(ErrorCode::StepInvalid, "unknown MergeBranches variant " + step.variant);
        }
        if (dual && locate(tree_, target_id_)) {
            throw Error(ErrorCode::StepInvalid, "dual-introduction needs the traced method to be absent");
        }
        if (!dual) {
            target("MergeBranches");
        }
        const auto branch = "side" + std::to_string(++merges_);
        const Tree base = tree_;

        // Side branch.
        git({"checkout", "-q", "-b", branch});
        std::optional<ExpectedRecord> side_record;
        if (dual) {
            tree_.at("Main.java").methods.push_back(target_method(next_constant()));
            side_record = ExpectedRecord{commit("Add computeTotal on " + branch, 10), commit_time_,
                                         {ChangeKind::Introduced}};
        } else if (step.resolution == MergeResolution::TakeOurs) {
            edit_bystander();
            commit("Tidy helper on " + branch, 10);
        } else {
            edit_body(target("MergeBranches"), {});
            side_record = ExpectedRecord{commit("Edit body on " + branch, 10), commit_time_, {ChangeKind::BodyChange}};
        }
        const Tree side = tree_;

        // Main line.
        git({"checkout", "-q", "main"});
        tree_ = base;
        written_.clear();
        for (const auto& [path, file] : tree_) {
            written_.insert(path);
        }
        std::optional<ExpectedRecord> main_record;
        if (dual) {
            tree_.at("Main.java").methods.push_back(target_method(next_constant()));
            commit("Add computeTotal on main", 20);
        } else if (step.resolution == MergeResolution::TakeTheirs) {
            edit_bystander();
            commit("Tidy helper on main", 20);
        } else {
            edit_body(target("MergeBranches"), {});
            main_record = ExpectedRecord{commit("Edit body on main", 20), commit_time_, {ChangeKind::BodyChange}};
        }
        const Tree ours = tree_;

        // Merge commit with an explicit resolution.
        commit_time_ = step_time_ + 30;
        git({"merge", "-q", "--no-ff", "--no-commit", branch}, true);
        if (!fs::exists(repo_ / ".git" / "MERGE_HEAD")) {
            throw Error(ErrorCode::ProcessFailed, "merge of " + branch + " did not start");
        }
        switch (step.resolution) {
        case MergeResolution::TakeOurs: tree_ = ours; break;
        case MergeResolution::TakeTheirs: tree_ = side; break;
        case MergeResolution::EditedResolution:
            tree_ = ours;
            edit_body(target("MergeBranches"), {});
            break;
        }
        const auto merge_id = commit("Merge " + branch + " (" + std::string(to_string(step.resolution)) + ")", 30);
        git({"branch", "-q", "-D", branch});

        if (side_record) {
            truth_.push_back(*side_record);
        }
        if (main_record) {
            truth_.push_back(*main_record);
        }
        if (step.resolution == MergeResolution::EditedResolution) {
            truth_.push_back({merge_id, commit_time_, {ChangeKind::BodyChange, ChangeKind::MergeResolutionChange}});
        }
    }

    fs::path repo_;
    Tree tree_;
    std::set<std::string> written_;
    std::vector<ExpectedRecord> truth_;
    std::map<std::string, int> names_;
    int target_id_ = kTargetId;
    int constant_ = 2;
    int merges_ = 0;
    std::int64_t step_time_ = kForgeEpoch;
    std::int64_t commit_time_ = kForgeEpoch;
};

}  // namespace

BuiltScenario build_scenario(const std::vector<ScenarioStep>& steps, const fs::path& workdir) {
    std::error_code ec;
    if (fs::exists(workdir, ec)) {
        if (!fs::is_directory(workdir, ec) || !fs::is_empty(workdir, ec)) {
            throw Error(ErrorCode::WorkdirNotEmpty, workdir.string() + " is not an empty directory");
        }
    } else {
        fs::create_directories(workdir);
    }
    Forge forge(fs::absolute(workdir));
    return forge.run(steps);
}

const std::vector<Scenario>& standard_catalog() {
    using K = StepKind;
    using R = MergeResolution;
    auto s = [](K kind, std::string variant = {}) { return ScenarioStep{kind, R::TakeOurs, std::move(variant), {}}; };
    auto merge = [](R resolution, std::string variant = {}) {
        return ScenarioStep{K::MergeBranches, resolution, std::move(variant), {}};
    };
    static const std::vector<Scenario> catalog{
        {"init-only", {s(K::InitFile)}},
        {"edit-body", {s(K::InitFile), s(K::EditBody)}},
        {"rename-method", {s(K::InitFile), s(K::RenameMethod)}},
        {"change-params", {s(K::InitFile), s(K::ChangeParams)}},
        {"move-method", {s(K::InitFile), s(K::MoveMethodToFile)}},
        {"rename-file", {s(K::InitFile), s(K::RenameFile)}},
        {"add-overload", {s(K::InitFile), s(K::AddOverload)}},
        {"merge-take-ours", {s(K::InitFile), s(K::EditBody), merge(R::TakeOurs)}},
        {"merge-take-theirs", {s(K::InitFile), merge(R::TakeTheirs)}},
        {"merge-edited", {s(K::InitFile), merge(R::EditedResolution)}},
        {"format-only", {s(K::InitFile), s(K::FormatOnly)}},
        {"edit-javadoc", {s(K::InitFile), s(K::EditJavadoc)}},
        {"edit-annotation", {s(K::InitFile), s(K::EditAnnotation)}},
        {"touch-other-file", {s(K::InitFile), s(K::TouchOtherFile)}},
        {"combo-chain",
         {s(K::InitFile), s(K::EditBody), s(K::RenameMethod), s(K::MoveMethodToFile), s(K::EditBody)}},
        {"combo-overload-introduction",
         {s(K::InitFile), s(K::EditBody), s(K::AddOverload, "retarget"), s(K::EditBody)}},
        {"combo-dual-introduction",
         {s(K::InitFile, "deferred"), merge(R::TakeOurs, "dual-introduction"), s(K::EditBody)}},
        {"combo-file-rename",
         {s(K::InitFile), s(K::EditBody), s(K::RenameFile), s(K::EditAnnotation)}},
        {"combo-merge-resolution",
         {s(K::InitFile), s(K::EditBody), merge(R::EditedResolution), s(K::FormatOnly), s(K::EditJavadoc)}},
        {"combo-mixed",
         {s(K::InitFile), s(K::ChangeParams), s(K::TouchOtherFile), merge(R::TakeOurs), s(K::MoveMethodToFile),
          s(K::RenameMethod), s(K::EditJavadoc)}},
    };
    return catalog;
}

OracleEntry to_oracle(const GroundTruth& truth, const std::string& name, const std::string& repository) {
    OracleEntry entry;
    entry.name = name;
    entry.repository = repository;
    entry.start_commit = truth.locator.commit.str();
    entry.file = truth.locator.file;
    entry.method_name = truth.locator.name;
    entry.start_line = truth.locator.line;
    for (const auto& record : truth.expected) {
        entry.expected.push_back({record.commit.str(), record.kinds, {}});
    }
    return entry;
}

}  // namespace mtrail
