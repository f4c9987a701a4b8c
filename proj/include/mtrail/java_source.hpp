#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtrail {

/// One method or constructor occurrence in a Java file.
struct MethodRecord {
    std::string file;
    std::string enclosing_type_path;  ///< e.g. "Outer.Inner" or "Outer$anon1"
    std::string name;
    std::vector<std::string> parameter_types;
    std::optional<std::string> return_type;  ///< absent for constructors
    std::string signature;                   ///< "Type#name(p1,p2)"
    std::optional<std::string> body_text;    ///< "{...}", absent for abstract methods
    std::string full_text;                   ///< Javadoc (if any) through the closing brace
    std::string annotations_text;
    std::string javadoc_text;
    int start_line = 0;
    int end_line = 0;

    /// full_text without the leading Javadoc.
    [[nodiscard]] std::string_view declaration_text() const noexcept;

    friend bool operator==(const MethodRecord&, const MethodRecord&) = default;
};

struct ParsedFile {
    std::string file;
    std::string commit;
    std::vector<MethodRecord> methods;  ///< sorted by start_line
    bool parse_ok = true;
    std::vector<std::string> diagnostics;
};

/// Extracts every method and constructor declaration. Never throws; syntax
/// problems come back as parse_ok=false with diagnostics.
ParsedFile parse_methods(std::string_view text, const std::string& file);

/// The method called `name` whose start line is within two lines of `line`,
/// exact matches first. Throws Error(MethodNotFound).
const MethodRecord& find_method(const ParsedFile& parsed, std::string_view name, int line);

/// Whitespace runs outside literals collapse to one space, comments are
/// dropped, literal contents stay byte-exact. Leading/trailing space trimmed.
std::string normalize_text(std::string_view text);

/// normalize_text over the body (empty for body-less methods).
std::string normalize_body(const MethodRecord& method);

/// Canonical form of a Java type written as source tokens:
/// "Map < String , int [ ] >" -> "Map<String,int[]>".
std::string normalize_type(std::string_view type_text);

/// Thread-safe cache of parsed files keyed by (blob id, path).
class ParseCache {
public:
    std::shared_ptr<const ParsedFile> get_or_parse(const std::string& blob_id, const std::string& path,
                                                   std::string_view text, const std::string& commit);
    [[nodiscard]] std::size_t size() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, std::shared_ptr<const ParsedFile>> entries_;
};

}  // namespace mtrail
