#include "mtrail/java_source.hpp"

#include "mtrail/error.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <unordered_set>

namespace mtrail {

std::string_view MethodRecord::declaration_text() const noexcept {
    std::string_view full = full_text;
    if (!javadoc_text.empty() && full.substr(0, javadoc_text.size()) == javadoc_text) {
        full.remove_prefix(javadoc_text.size());
        while (!full.empty() && (full.front() == ' ' || full.front() == '\t' || full.front() == '\n' ||
                                 full.front() == '\r' || full.front() == '\f')) {
            full.remove_prefix(1);
        }
    }
    return full;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class TokenKind { Word, Number, String, Char, Punct };

struct Token {
    TokenKind kind;
    std::size_t begin;
    std::size_t end;
    int line;
};

struct Comment {
    std::size_t begin;
    std::size_t end;
    bool doc;
};

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct Lexed {
    std::vector<Token> tokens;
    std::vector<Comment> comments;
    std::vector<std::string> errors;
};

Lexed lex(std::string_view text) {
    Lexed out;
    std::size_t i = 0;
    int line = 1;
    const auto n = text.size();

    auto advance_to = [&](std::size_t target) {
        for (; i < target && i < n; ++i) {
            if (text[i] == '\n') {
                ++line;
            }
        }
    };

    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            advance_to(i + 1);
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            const auto start = i;
            auto stop = text.find('\n', i);
            if (stop == std::string_view::npos) {
                stop = n;
            }
            out.comments.push_back({start, stop, false});
            advance_to(stop);
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            const auto start = i;
            const auto close = text.find("*/", i + 2);
            if (close == std::string_view::npos) {
                out.errors.push_back("line " + std::to_string(line) + ": unterminated block comment");
                advance_to(n);
                break;
            }
            const bool doc = i + 2 < n && text[i + 2] == '*' && close != i + 2;
            out.comments.push_back({start, close + 2, doc});
            advance_to(close + 2);
            continue;
        }
        const int tok_line = line;
        const auto start = i;
        if (c == '"') {
            if (text.substr(i, 3) == "\"\"\"") {
                std::size_t k = i + 3;
                bool closed = false;
                while (k < n) {
                    if (text[k] == '\\') {
                        k += 2;
                        continue;
                    }
                    if (text.substr(k, 3) == "\"\"\"") {
                        closed = true;
                        k += 3;
                        break;
                    }
                    ++k;
                }
                if (!closed) {
                    out.errors.push_back("line " + std::to_string(tok_line) + ": unterminated text block");
                }
                advance_to(std::min(k, n));
                out.tokens.push_back({TokenKind::String, start, i, tok_line});
                continue;
            }
            std::size_t k = i + 1;
            bool closed = false;
            while (k < n && text[k] != '\n') {
                if (text[k] == '\\') {
                    k += 2;
                    continue;
                }
                if (text[k] == '"') {
                    closed = true;
                    ++k;
                    break;
                }
                ++k;
            }
            if (!closed) {
                out.errors.push_back("line " + std::to_string(tok_line) + ": unterminated string literal");
            }
            advance_to(std::min(k, n));
            out.tokens.push_back({TokenKind::String, start, i, tok_line});
            continue;
        }
        if (c == '\'') {
            std::size_t k = i + 1;
            bool closed = false;
            while (k < n && text[k] != '\n') {
                if (text[k] == '\\') {
                    k += 2;
                    continue;
                }
                if (text[k] == '\'') {
                    closed = true;
                    ++k;
                    break;
                }
                ++k;
            }
            if (!closed) {
                out.errors.push_back("line " + std::to_string(tok_line) + ": unterminated character literal");
            }
            advance_to(std::min(k, n));
            out.tokens.push_back({TokenKind::Char, start, i, tok_line});
            continue;
        }
        if (is_ident_start(static_cast<unsigned char>(c))) {
            std::size_t k = i + 1;
            while (k < n && is_ident_part(static_cast<unsigned char>(text[k]))) {
                ++k;
            }
            advance_to(k);
            out.tokens.push_back({TokenKind::Word, start, i, tok_line});
            continue;
        }
        if ((c >= '0' && c <= '9') || (c == '.' && i + 1 < n && text[i + 1] >= '0' && text[i + 1] <= '9')) {
            std::size_t k = i + 1;
            while (k < n) {
                const char d = text[k];
                if (is_ident_part(static_cast<unsigned char>(d)) || d == '.') {
                    ++k;
                } else if ((d == '+' || d == '-') &&
                           (text[k - 1] == 'e' || text[k - 1] == 'E' || text[k - 1] == 'p' ||
                            text[k - 1] == 'P') &&
                           !(text.substr(start, 2) == "0x" || text.substr(start, 2) == "0X")) {
                    ++k;
                } else {
                    break;
                }
            }
            advance_to(k);
            out.tokens.push_back({TokenKind::Number, start, i, tok_line});
            continue;
        }
        std::size_t len = 1;
        if (text.substr(i, 3) == "...") {
            len = 3;
        } else if (text.substr(i, 2) == "::") {
            len = 2;
        }
        advance_to(i + len);
        out.tokens.push_back({TokenKind::Punct, start, i, tok_line});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural parser
// ---------------------------------------------------------------------------

const std::unordered_set<std::string_view>& modifier_words() {
    static const std::unordered_set<std::string_view> words{
        "public",   "protected", "private",  "static",       "abstract", "final",
        "native",   "synchronized", "transient", "volatile", "strictfp", "default",
        "sealed",   "non"};
    return words;
}

class Parser {
public:
    Parser(std::string_view text, const std::string& file, Lexed lexed)
        : text_(text), file_(file), tokens_(std::move(lexed.tokens)), comments_(std::move(lexed.comments)) {}

    bool run(std::vector<MethodRecord>& methods, std::vector<std::string>& diagnostics) {
        if (!compute_matches(diagnostics)) {
            return false;
        }
        parse_members(0, tokens_.size(), "");
        if (!errors_.empty()) {
            diagnostics.insert(diagnostics.end(), errors_.begin(), errors_.end());
            return false;
        }
        methods = std::move(methods_);
        return true;
    }

private:
    std::string_view tok(std::size_t i) const {
        if (i >= tokens_.size()) {
            return {};
        }
        return text_.substr(tokens_[i].begin, tokens_[i].end - tokens_[i].begin);
    }
    bool is(std::size_t i, std::string_view s) const { return tok(i) == s; }
    bool is_word(std::size_t i) const { return i < tokens_.size() && tokens_[i].kind == TokenKind::Word; }

    bool compute_matches(std::vector<std::string>& diagnostics) {
        match_.assign(tokens_.size(), 0);
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            if (tokens_[i].kind != TokenKind::Punct) {
                continue;
            }
            const auto t = tok(i);
            if (t == "(" || t == "{" || t == "[") {
                stack.push_back(i);
            } else if (t == ")" || t == "}" || t == "]") {
                const char open = t == ")" ? '(' : t == "}" ? '{' : '[';
                if (stack.empty() || tok(stack.back()).front() != open) {
                    diagnostics.push_back("line " + std::to_string(tokens_[i].line) + ": unbalanced '" +
                                          std::string(t) + "'");
                    return false;
                }
                match_[stack.back()] = i;
                match_[i] = stack.back();
                stack.pop_back();
            }
        }
        if (!stack.empty()) {
            diagnostics.push_back("line " + std::to_string(tokens_[stack.back()].line) + ": unclosed '" +
                                  std::string(tok(stack.back())) + "'");
            return false;
        }
        return true;
    }

    /// Skips a balanced "<...>" starting at `i`; returns the index after it.
    std::size_t skip_angles(std::size_t i, std::size_t end) const {
        int depth = 0;
        for (; i < end; ++i) {
            const auto t = tok(i);
            if (t == "<") {
                ++depth;
            } else if (t == ">") {
                if (--depth == 0) {
                    return i + 1;
                }
            } else if (t == "(" || t == "[") {
                i = match_[i];
            } else if (t == ";" || t == "{" || t == "}" || t == "=") {
                return i;
            }
        }
        return end;
    }

    std::size_t skip_annotation(std::size_t i, std::size_t end) const {
        std::size_t k = i + 1;  // past '@'
        if (k < end && is_word(k)) {
            ++k;
        }
        while (k + 1 < end && is(k, ".") && is_word(k + 1)) {
            k += 2;
        }
        if (k < end && is(k, "(")) {
            k = match_[k] + 1;
        }
        return k;
    }

    struct Modifiers {
        std::size_t next;
        std::vector<std::pair<std::size_t, std::size_t>> annotations;  // token ranges [first, last)
    };

    Modifiers skip_modifiers(std::size_t i, std::size_t end) const {
        Modifiers mods{i, {}};
        while (mods.next < end) {
            const auto k = mods.next;
            if (is(k, "@") && !is(k + 1, "interface")) {
                const auto after = skip_annotation(k, end);
                mods.annotations.emplace_back(k, after);
                mods.next = after;
            } else if (is_word(k) && modifier_words().count(tok(k)) != 0) {
                if (tok(k) == "non") {
                    if (!(is(k + 1, "-") && is(k + 2, "sealed"))) {
                        break;
                    }
                    mods.next = k + 3;
                } else {
                    mods.next = k + 1;
                }
            } else {
                break;
            }
        }
        return mods;
    }

    bool starts_type_decl(std::size_t k, std::size_t end) const {
        const auto t = tok(k);
        if (t == "class" || t == "interface" || t == "enum") {
            return is_word(k + 1);
        }
        if (t == "@" && is(k + 1, "interface")) {
            return true;
        }
        if (t == "record" && k + 2 < end && is_word(k + 1)) {
            return is(k + 2, "(") || is(k + 2, "<");
        }
        return false;
    }

    void parse_members(std::size_t i, std::size_t end, const std::string& type_path) {
        while (i < end) {
            if (is(i, ";")) {
                ++i;
                continue;
            }
            const auto member_start = i;
            const auto mods = skip_modifiers(i, end);
            auto j = mods.next;
            if (j >= end) {
                break;
            }
            if (is(j, "{")) {
                scan_code(j + 1, match_[j], type_path);
                i = match_[j] + 1;
                continue;
            }
            if (is(j, "package") || is(j, "import")) {
                while (j < end && !is(j, ";")) {
                    ++j;
                }
                i = j + 1;
                continue;
            }
            if (starts_type_decl(j, end)) {
                i = parse_type_decl(j, end, type_path);
                continue;
            }
            i = parse_member(member_start, mods, end, type_path);
        }
    }

    std::string simple_name(const std::string& type_path) const {
        auto pos = type_path.find_last_of(".$");
        return pos == std::string::npos ? type_path : type_path.substr(pos + 1);
    }

    std::size_t parse_member(std::size_t member_start, const Modifiers& mods, std::size_t end,
                             const std::string& type_path) {
        const auto j = mods.next;
        // Record compact constructor: `Name {`
        if (is_word(j) && is(j + 1, "{") && tok(j) == simple_name(type_path)) {
            return emit_method(member_start, mods, j, std::nullopt, j + 1, type_path);
        }
        int angle = 0;
        for (auto k = j; k < end; ++k) {
            const auto t = tok(k);
            if (t == "<") {
                ++angle;
            } else if (t == ">") {
                --angle;
            } else if (t == "[") {
                k = match_[k];
            } else if (t == "(" && angle <= 0) {
                if (k > j && is_word(k - 1)) {
                    return emit_method(member_start, mods, k - 1, k, 0, type_path);
                }
                k = match_[k];
            } else if (t == "=" || t == ";") {
                return skip_field(k, end, type_path);
            } else if (t == "{") {
                scan_code(k + 1, match_[k], type_path);
                return match_[k] + 1;
            } else if (t == "}" ) {
                return k + 1;
            }
        }
        return end;
    }

    std::size_t skip_field(std::size_t k, std::size_t end, const std::string& type_path) {
        const auto init_start = k;
        while (k < end && !is(k, ";")) {
            const auto t = tok(k);
            if (t == "(" || t == "{" || t == "[") {
                k = match_[k];
            }
            ++k;
        }
        scan_code(init_start, std::min(k, end), type_path);
        return k + 1;
    }

    std::size_t parse_type_decl(std::size_t kw, std::size_t end, const std::string& type_path) {
        const bool annotation_type = is(kw, "@");
        const auto keyword = annotation_type ? std::string_view("@interface") : tok(kw);
        const auto name_index = annotation_type ? kw + 2 : kw + 1;
        if (!is_word(name_index)) {
            errors_.push_back("line " + std::to_string(tokens_[kw].line) + ": type declaration without a name");
            return end;
        }
        const std::string name(tok(name_index));
        const auto path = type_path.empty() ? name : type_path + "." + name;
        auto k = name_index + 1;
        while (k < end && !is(k, "{")) {
            if (is(k, "<")) {
                k = skip_angles(k, end);
                continue;
            }
            if (is(k, "(") || is(k, "[")) {
                k = match_[k];
            } else if (is(k, ";") || is(k, "}")) {
                errors_.push_back("line " + std::to_string(tokens_[kw].line) + ": type " + name +
                                  " has no body");
                return k + 1;
            }
            ++k;
        }
        if (k >= end) {
            errors_.push_back("line " + std::to_string(tokens_[kw].line) + ": type " + name + " has no body");
            return end;
        }
        const auto close = match_[k];
        if (keyword == "enum") {
            parse_enum_body(k + 1, close, path);
        } else {
            parse_members(k + 1, close, path);
        }
        return close + 1;
    }

    void parse_enum_body(std::size_t i, std::size_t end, const std::string& path) {
        while (i < end) {
            if (is(i, ";")) {
                parse_members(i + 1, end, path);
                return;
            }
            if (is(i, "@")) {
                i = skip_annotation(i, end);
                continue;
            }
            if (is(i, "(")) {
                scan_code(i + 1, match_[i], path);
                i = match_[i] + 1;
                continue;
            }
            if (is(i, "{")) {
                parse_members(i + 1, match_[i], next_anon(path));
                i = match_[i] + 1;
                continue;
            }
            ++i;
        }
    }

    std::string next_anon(const std::string& type_path) {
        return type_path + "$anon" + std::to_string(++anon_counter_[type_path]);
    }

    /// Looks for local and anonymous classes inside executable code.
    void scan_code(std::size_t i, std::size_t end, const std::string& type_path) {
        while (i < end) {
            const auto t = tok(i);
            const bool after_dot = i > 0 && (is(i - 1, ".") || is(i - 1, "::"));
            if (t == "new" && is_word(i)) {
                auto k = i + 1;
                while (k < end) {
                    if (is(k, "@")) {
                        k = skip_annotation(k, end);
                    } else if (is(k, "<")) {
                        k = skip_angles(k, end);
                    } else if (is_word(k) || is(k, ".")) {
                        ++k;
                    } else {
                        break;
                    }
                }
                if (k < end && is(k, "(")) {
                    const auto close = match_[k];
                    scan_code(k + 1, close, type_path);
                    if (close + 1 < end && is(close + 1, "{")) {
                        const auto body_close = match_[close + 1];
                        parse_members(close + 2, body_close, next_anon(type_path));
                        i = body_close + 1;
                    } else {
                        i = close + 1;
                    }
                    continue;
                }
                i = k;
                continue;
            }
            if (!after_dot && is_word(i) && starts_type_decl(i, end) && t != "@") {
                i = parse_type_decl(i, end, type_path);
                continue;
            }
            ++i;
        }
    }

    std::string join_tokens(std::size_t begin, std::size_t end) const {
        std::string out;
        std::string_view prev;
        bool prev_word = false;
        for (auto k = begin; k < end; ++k) {
            const auto t = tok(k);
            const bool word = tokens_[k].kind == TokenKind::Word || tokens_[k].kind == TokenKind::Number;
            if (!out.empty() && word && (prev_word || prev == "?" || prev == "&")) {
                out += ' ';
            } else if (!out.empty() && t == "&") {
                out += ' ';
            }
            out += t;
            prev = t;
            prev_word = word;
        }
        return out;
    }

    std::vector<std::string> parse_parameters(std::size_t open, std::size_t close) const {
        std::vector<std::string> types;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        int angle = 0;
        auto start = open + 1;
        for (auto k = open + 1; k < close; ++k) {
            const auto t = tok(k);
            if (t == "<") {
                ++angle;
            } else if (t == ">") {
                --angle;
            } else if (t == "(" || t == "[" || t == "{") {
                k = match_[k];
            } else if (t == "," && angle <= 0) {
                ranges.emplace_back(start, k);
                start = k + 1;
            }
        }
        if (start < close) {
            ranges.emplace_back(start, close);
        }
        for (auto [b, e] : ranges) {
            std::vector<std::size_t> kept;
            for (auto k = b; k < e;) {
                if (is(k, "@")) {
                    k = skip_annotation(k, e);
                } else if (is(k, "final")) {
                    ++k;
                } else {
                    kept.push_back(k++);
                }
            }
            int dims = 0;
            while (kept.size() >= 2 && tok(kept.back()) == "]" && tok(kept[kept.size() - 2]) == "[") {
                kept.resize(kept.size() - 2);
                ++dims;
            }
            if (kept.size() < 2) {
                continue;
            }
            if (tok(kept.back()) == "this") {
                continue;  // receiver parameter
            }
            kept.pop_back();  // parameter name
            std::string type;
            for (std::size_t idx = 0; idx < kept.size(); ++idx) {
                const auto k = kept[idx];
                const bool word = tokens_[k].kind == TokenKind::Word || tokens_[k].kind == TokenKind::Number;
                if (idx > 0) {
                    const auto pk = kept[idx - 1];
                    const bool prev_word =
                        tokens_[pk].kind == TokenKind::Word || tokens_[pk].kind == TokenKind::Number;
                    if (word && (prev_word || tok(pk) == "?" || tok(pk) == "&")) {
                        type += ' ';
                    } else if (tok(k) == "&") {
                        type += ' ';
                    }
                }
                type += tok(k);
            }
            for (int d = 0; d < dims; ++d) {
                type += "[]";
            }
            types.push_back(std::move(type));
        }
        return types;
    }

    std::optional<std::size_t> javadoc_before(std::size_t member_start) const {
        const auto limit = tokens_[member_start].begin;
        const auto floor = member_start > 0 ? tokens_[member_start - 1].end : 0;
        std::optional<std::size_t> found;
        for (std::size_t c = 0; c < comments_.size(); ++c) {
            if (comments_[c].begin >= floor && comments_[c].end <= limit) {
                found = c;
            }
        }
        if (found && comments_[*found].doc) {
            return found;
        }
        return std::nullopt;
    }

    /// `paren` is the '(' of the parameter list; `compact_brace` is set instead
    /// for record compact constructors.
    std::size_t emit_method(std::size_t member_start, const Modifiers& mods, std::size_t name_index,
                            std::optional<std::size_t> paren, std::size_t compact_brace,
                            const std::string& type_path) {
        MethodRecord record;
        record.file = file_;
        record.enclosing_type_path = type_path;
        record.name = std::string(tok(name_index));

        auto type_begin = mods.next;
        if (is(type_begin, "<")) {
            type_begin = skip_angles(type_begin, name_index);
        }
        std::size_t k;
        if (paren) {
            record.parameter_types = parse_parameters(*paren, match_[*paren]);
            k = match_[*paren] + 1;
        } else {
            k = compact_brace;
        }
        std::string dims;
        while (is(k, "[") && is(k + 1, "]")) {
            dims += "[]";
            k += 2;
        }
        if (type_begin < name_index) {
            record.return_type = join_tokens(type_begin, name_index) + dims;
        }
        while (k < tokens_.size() && !is(k, "{") && !is(k, ";") && !is(k, "}")) {
            if (is(k, "(") || is(k, "[")) {
                k = match_[k];
            }
            ++k;
        }
        std::size_t last = k;
        if (is(k, "{")) {
            last = match_[k];
            record.body_text = std::string(text_.substr(tokens_[k].begin, tokens_[last].end - tokens_[k].begin));
        } else if (!is(k, ";")) {
            errors_.push_back("line " + std::to_string(tokens_[name_index].line) + ": method " + record.name +
                              " has no body or terminator");
            return k + 1;
        }

        std::size_t text_begin = tokens_[member_start].begin;
        if (auto doc = javadoc_before(member_start)) {
            const auto& comment = comments_[*doc];
            record.javadoc_text = std::string(text_.substr(comment.begin, comment.end - comment.begin));
            text_begin = comment.begin;
        }
        record.full_text = std::string(text_.substr(text_begin, tokens_[last].end - text_begin));
        for (const auto& [first, after] : mods.annotations) {
            if (!record.annotations_text.empty()) {
                record.annotations_text += '\n';
            }
            record.annotations_text +=
                std::string(text_.substr(tokens_[first].begin, tokens_[after - 1].end - tokens_[first].begin));
        }
        record.start_line = tokens_[member_start].line;
        record.end_line = tokens_[last].line;

        record.signature = type_path + "#" + record.name + "(";
        for (std::size_t p = 0; p < record.parameter_types.size(); ++p) {
            if (p > 0) {
                record.signature += ',';
            }
            record.signature += record.parameter_types[p];
        }
        record.signature += ')';

        methods_.push_back(std::move(record));
        if (is(k, "{")) {
            scan_code(k + 1, last, type_path);
        }
        return last + 1;
    }

    std::string_view text_;
    const std::string& file_;
    std::vector<Token> tokens_;
    std::vector<Comment> comments_;
    std::vector<std::size_t> match_;
    std::vector<MethodRecord> methods_;
    std::vector<std::string> errors_;
    std::map<std::string, int> anon_counter_;
};

}  // namespace

ParsedFile parse_methods(std::string_view text, const std::string& file) {
    ParsedFile parsed;
    parsed.file = file;
    auto lexed = lex(text);
    if (!lexed.errors.empty()) {
        parsed.parse_ok = false;
        parsed.diagnostics = std::move(lexed.errors);
        return parsed;
    }
    Parser parser(text, file, std::move(lexed));
    std::vector<MethodRecord> methods;
    if (!parser.run(methods, parsed.diagnostics)) {
        parsed.parse_ok = false;
        return parsed;
    }
    std::stable_sort(methods.begin(), methods.end(), [](const MethodRecord& a, const MethodRecord& b) {
        return a.start_line < b.start_line;
    });
    parsed.methods = std::move(methods);
    return parsed;
}

const MethodRecord& find_method(const ParsedFile& parsed, std::string_view name, int line) {
    const MethodRecord* best = nullptr;
    int best_distance = 0;
    for (const auto& method : parsed.methods) {
        if (method.name != name) {
            continue;
        }
        const int distance = std::abs(method.start_line - line);
        if (distance > 2) {
            continue;
        }
        if (best == nullptr || distance < best_distance) {
            best = &method;
            best_distance = distance;
        }
    }
    if (best == nullptr) {
        throw Error(ErrorCode::MethodNotFound,
                    "method " + std::string(name) + " not found near line " + std::to_string(line) + " of " +
                        parsed.file);
    }
    return *best;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    auto emit_space = [&] {
        if (!out.empty()) {
            pending_space = true;
        }
    };
    auto flush = [&] {
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
    };
    const auto n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            emit_space();
            ++i;
        } else if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            auto stop = text.find('\n', i);
            i = stop == std::string_view::npos ? n : stop;
            emit_space();
        } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            auto stop = text.find("*/", i + 2);
            i = stop == std::string_view::npos ? n : stop + 2;
            emit_space();
        } else if (c == '"' || c == '\'') {
            std::size_t k = i + 1;
            const bool block = c == '"' && text.substr(i, 3) == "\"\"\"";
            if (block) {
                k = i + 3;
            }
            while (k < n) {
                if (text[k] == '\\') {
                    k += 2;
                    continue;
                }
                if (block ? text.substr(k, 3) == "\"\"\"" : text[k] == c) {
                    k += block ? 3 : 1;
                    break;
                }
                if (!block && text[k] == '\n') {
                    break;
                }
                ++k;
            }
            k = std::min(k, n);
            flush();
            out.append(text.substr(i, k - i));
            i = k;
        } else {
            flush();
            out += c;
            ++i;
        }
    }
    return out;
}

std::string normalize_body(const MethodRecord& method) {
    return method.body_text ? normalize_text(*method.body_text) : std::string();
}

std::string normalize_type(std::string_view type_text) {
    auto lexed = lex(type_text);
    std::string out;
    std::string_view prev;
    bool prev_word = false;
    for (const auto& token : lexed.tokens) {
        const auto t = type_text.substr(token.begin, token.end - token.begin);
        const bool word = token.kind == TokenKind::Word || token.kind == TokenKind::Number;
        if (!out.empty() && ((word && (prev_word || prev == "?" || prev == "&")) || t == "&")) {
            out += ' ';
        }
        out += t;
        prev = t;
        prev_word = word;
    }
    return out;
}

std::shared_ptr<const ParsedFile> ParseCache::get_or_parse(const std::string& blob_id, const std::string& path,
                                                           std::string_view text, const std::string& commit) {
    const auto key = std::pair(blob_id, path);
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            return it->second;
        }
    }
    auto parsed = std::make_shared<ParsedFile>(parse_methods(text, path));
    parsed->commit = commit;
    std::lock_guard lock(mutex_);
    return entries_.emplace(key, std::move(parsed)).first->second;
}

std::size_t ParseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void ParseCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

}  // namespace mtrail
