#include "relrad/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "json.hpp"
#include "relrad/text.hpp"

namespace relrad {

namespace {

using ojson = nlohmann::ordered_json;

// ---- DDL lexer ---------------------------------------------------------------

enum class Tok { Ident, Number, LParen, RParen, Comma, Semi, String, End };

struct Token {
    Tok kind;
    std::string text;  // raw spelling for Ident/Number/String
    int line;
    int col;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws_and_comments();
        const int line = line_, col = col_;
        if (pos_ >= src_.size()) return {Tok::End, "", line, col};
        const char c = src_[pos_];
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc) || c == '_') {
            std::string s;
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                if (!std::isalnum(static_cast<unsigned char>(d)) && d != '_') break;
                s.push_back(d);
                advance();
            }
            return {Tok::Ident, s, line, col};
        }
        if (std::isdigit(uc)) {
            std::string s;
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                if (!std::isdigit(static_cast<unsigned char>(d)) && d != '.') break;
                s.push_back(d);
                advance();
            }
            return {Tok::Number, s, line, col};
        }
        if (c == '\'') {  // single-quoted literal ('' escapes a quote)
            advance();
            std::string s;
            while (pos_ < src_.size()) {
                if (src_[pos_] == '\'') {
                    advance();
                    if (pos_ < src_.size() && src_[pos_] == '\'') {
                        s.push_back('\'');
                        advance();
                        continue;
                    }
                    return {Tok::String, s, line, col};
                }
                s.push_back(src_[pos_]);
                advance();
            }
            throw ParseError(line, col, "closing quote");
        }
        switch (c) {
            case '(': advance(); return {Tok::LParen, "(", line, col};
            case ')': advance(); return {Tok::RParen, ")", line, col};
            case ',': advance(); return {Tok::Comma, ",", line, col};
            case ';': advance(); return {Tok::Semi, ";", line, col};
        }
        throw ParseError(line, col, "identifier, number, or punctuation");
    }

  private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws_and_comments() {
        for (;;) {
            while (pos_ < src_.size() &&
                   std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                advance();
            }
            if (pos_ + 1 < src_.size() && src_[pos_] == '-' && src_[pos_ + 1] == '-') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            return;
        }
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---- DDL parser ---------------------------------------------------------------

DataType map_sql_type(const std::string& raw, const std::string& table,
                      const std::string& col, std::vector<std::string>* warnings) {
    const std::string t = lowercase(raw);
    if (t == "int" || t == "integer" || t == "bigint" || t == "smallint" ||
        t == "tinyint" || t == "serial") {
        return DataType::Int;
    }
    if (t == "float" || t == "double" || t == "real" || t == "decimal" ||
        t == "numeric") {
        return DataType::Float;
    }
    if (t == "text" || t == "varchar" || t == "char" || t == "clob" || t == "string") {
        return DataType::Text;
    }
    if (t == "date" || t == "datetime" || t == "timestamp" || t == "time") {
        return DataType::Date;
    }
    if (t == "bool" || t == "boolean") {
        return DataType::Bool;
    }
    if (warnings) {
        warnings->push_back("unknown type '" + raw + "' on " + table + "." + col +
                            "; treating as text");
    }
    return DataType::Text;
}

struct PendingFk {
    std::string table;
    std::string col;
    std::string ref_table;
    std::string ref_col;
};

class DdlParser {
  public:
    DdlParser(const std::string& text, std::vector<std::string>* warnings)
        : lex_(text), warnings_(warnings) {
        cur_ = lex_.next();
    }

    SchemaGraph parse() {
        while (cur_.kind != Tok::End) parse_create_table();
        link_fks();
        return builder_.build();
    }

  private:
    bool is_kw(const char* kw) const {
        return cur_.kind == Tok::Ident && lowercase(cur_.text) == kw;
    }

    void expect_kw(const char* kw) {
        if (!is_kw(kw)) throw ParseError(cur_.line, cur_.col, std::string("'") + kw + "'");
        bump();
    }

    Token expect(Tok kind, const char* what) {
        if (cur_.kind != kind) throw ParseError(cur_.line, cur_.col, what);
        Token t = cur_;
        bump();
        return t;
    }

    void bump() { cur_ = lex_.next(); }

    void parse_create_table() {
        expect_kw("create");
        expect_kw("table");
        const Token name = expect(Tok::Ident, "table name");
        if (builder_.has_node(name.text)) {
            throw ParseError(name.line, name.col, "a new table name");
        }
        builder_.add_table(name.text);
        expect(Tok::LParen, "'('");
        parse_table_item(name.text);
        while (cur_.kind == Tok::Comma) {
            bump();
            parse_table_item(name.text);
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
    }

    void parse_table_item(const std::string& table) {
        if (is_kw("foreign")) {
            bump();
            expect_kw("key");
            expect(Tok::LParen, "'('");
            const Token col = expect(Tok::Ident, "column name");
            expect(Tok::RParen, "')'");
            expect_kw("references");
            const Token rt = expect(Tok::Ident, "referenced table");
            expect(Tok::LParen, "'('");
            const Token rc = expect(Tok::Ident, "referenced column");
            expect(Tok::RParen, "')'");
            fks_.push_back({table, col.text, rt.text, rc.text});
            return;
        }
        const Token col = expect(Tok::Ident, "column name");
        const Token ty = expect(Tok::Ident, "column type");
        // optional type arguments: VARCHAR(255), DECIMAL(10,2)
        if (cur_.kind == Tok::LParen) {
            bump();
            expect(Tok::Number, "type argument");
            if (cur_.kind == Tok::Comma) {
                bump();
                expect(Tok::Number, "type argument");
            }
            expect(Tok::RParen, "')'");
        }
        parse_column_suffixes();
        FeatureRecord rec;
        rec.name = col.text;
        rec.data_type = map_sql_type(ty.text, table, col.text, warnings_);
        const std::string id = table + "." + col.text;
        if (builder_.has_node(id)) {
            throw ParseError(col.line, col.col, "a new column name");
        }
        builder_.add_attribute(table, col.text, rec);
    }

    // Tolerated, ignored constraint tails on a column definition.
    void parse_column_suffixes() {
        for (;;) {
            if (is_kw("primary")) {
                bump();
                expect_kw("key");
            } else if (is_kw("not")) {
                bump();
                expect_kw("null");
            } else if (is_kw("unique") || is_kw("auto_increment")) {
                bump();
            } else if (is_kw("default")) {
                bump();
                if (cur_.kind != Tok::Number && cur_.kind != Tok::String &&
                    cur_.kind != Tok::Ident) {
                    throw ParseError(cur_.line, cur_.col, "default literal");
                }
                bump();
            } else {
                return;
            }
        }
    }

    void link_fks() {
        for (const auto& fk : fks_) {
            const std::string src = fk.table + "." + fk.col;
            const std::string dst = fk.ref_table + "." + fk.ref_col;
            if (!builder_.has_node(src)) {
                throw LinkError("foreign key on undeclared column " + src);
            }
            if (!builder_.has_node(dst)) {
                throw LinkError("foreign key references undeclared column " + dst);
            }
            builder_.add_foreign_key(src, dst);
        }
    }

    Lexer lex_;
    Token cur_{Tok::End, "", 0, 0};
    SchemaGraphBuilder builder_;
    std::vector<PendingFk> fks_;
    std::vector<std::string>* warnings_;
};

// ---- JSON helpers --------------------------------------------------------------

[[noreturn]] void format_fail(const std::string& path, const std::string& why) {
    throw FormatError("at " + path + ": " + why);
}

const ojson& need(const ojson& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) format_fail(path, std::string("missing key '") + key + "'");
    return *it;
}

std::string need_string(const ojson& obj, const std::string& path, const char* key) {
    const ojson& v = need(obj, path, key);
    if (!v.is_string()) format_fail(path + "/" + key, "expected string");
    return v.get<std::string>();
}

std::int64_t need_count(const ojson& obj, const std::string& path, const char* key) {
    const ojson& v = need(obj, path, key);
    if (!v.is_number_integer()) format_fail(path + "/" + key, "expected integer");
    return v.get<std::int64_t>();
}

double need_real(const ojson& obj, const std::string& path, const char* key) {
    const ojson& v = need(obj, path, key);
    if (!v.is_number()) format_fail(path + "/" + key, "expected number");
    return v.get<double>();
}

}  // namespace

SchemaGraph parse_ddl(const std::string& text) {
    return DdlParser(text, nullptr).parse();
}

SchemaGraph parse_ddl(const std::string& text, std::vector<std::string>& warnings) {
    return DdlParser(text, &warnings).parse();
}

SchemaGraph load_json(const std::string& text) {
    const ojson doc = ojson::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw FormatError("at /: not valid JSON");
    if (!doc.is_object()) format_fail("/", "expected object");

    SchemaGraphBuilder b;

    const ojson& tables = need(doc, "/", "tables");
    if (!tables.is_array()) format_fail("/tables", "expected array");
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const std::string path = "/tables/" + std::to_string(i);
        if (!tables[i].is_object()) format_fail(path, "expected object");
        b.add_table(need_string(tables[i], path, "name"));
    }

    const ojson& attrs = need(doc, "/", "attributes");
    if (!attrs.is_array()) format_fail("/attributes", "expected array");
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        const std::string path = "/attributes/" + std::to_string(i);
        const ojson& a = attrs[i];
        if (!a.is_object()) format_fail(path, "expected object");
        FeatureRecord rec;
        rec.name = need_string(a, path, "name");
        const std::string ty = need_string(a, path, "data_type");
        const auto dt = data_type_from_string(ty);
        if (!dt) format_fail(path + "/data_type", "unknown data type '" + ty + "'");
        rec.data_type = *dt;
        rec.distinct_count = need_count(a, path, "distinct_count");
        rec.row_count = need_count(a, path, "row_count");
        rec.null_fraction = need_real(a, path, "null_fraction");
        rec.mean_length = need_real(a, path, "mean_length");
        need_string(a, path, "table");  // informative; membership edges are authoritative
        bool marker = false;
        if (auto it = a.find("marker"); it != a.end()) {
            if (!it->is_boolean()) format_fail(path + "/marker", "expected boolean");
            marker = it->get<bool>();
        }
        b.add_detached_attribute(need_string(a, path, "id"), rec, marker);
    }

    const ojson& edges = need(doc, "/", "edges");
    if (!edges.is_array()) format_fail("/edges", "expected array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string path = "/edges/" + std::to_string(i);
        const ojson& e = edges[i];
        if (!e.is_object()) format_fail(path, "expected object");
        const std::string src = need_string(e, path, "src");
        const std::string dst = need_string(e, path, "dst");
        const std::string kind = need_string(e, path, "kind");
        std::optional<double> label;
        if (auto it = e.find("label"); it != e.end()) {
            if (!it->is_number()) format_fail(path + "/label", "expected number");
            label = it->get<double>();
        }
        try {
            if (kind == "membership") {
                b.add_membership(src, dst);
            } else if (kind == "candidate") {
                b.add_candidate(src, dst, label);
            } else if (kind == "foreign_key") {
                b.add_foreign_key(src, dst);
            } else {
                format_fail(path + "/kind", "unknown edge kind '" + kind + "'");
            }
        } catch (const UnknownNodeError& ex) {
            throw LinkError("at " + path + ": " + ex.what());
        }
    }

    return b.build();
}

std::string emit_json(const SchemaGraph& g) {
    ojson doc;

    std::vector<std::string> table_names;
    for (const auto& t : g.tables()) table_names.push_back(t.id);
    std::sort(table_names.begin(), table_names.end());
    doc["tables"] = ojson::array();
    for (const auto& name : table_names) doc["tables"].push_back({{"name", name}});

    std::vector<const AttributeNode*> attrs;
    for (const auto& a : g.attributes()) attrs.push_back(&a);
    std::sort(attrs.begin(), attrs.end(),
              [](const AttributeNode* x, const AttributeNode* y) { return x->id < y->id; });
    doc["attributes"] = ojson::array();
    for (const AttributeNode* a : attrs) {
        ojson j;
        j["id"] = a->id;
        j["table"] = g.owner_table(a->id).value_or("");
        j["name"] = a->record.name;
        j["data_type"] = to_string(a->record.data_type);
        j["distinct_count"] = a->record.distinct_count;
        j["row_count"] = a->record.row_count;
        j["null_fraction"] = a->record.null_fraction;
        j["mean_length"] = a->record.mean_length;
        if (a->marker) j["marker"] = true;
        doc["attributes"].push_back(std::move(j));
    }

    std::vector<SchemaEdge> edges = g.edges();
    std::sort(edges.begin(), edges.end(), [](const SchemaEdge& a, const SchemaEdge& b) {
        if (a.src != b.src) return a.src < b.src;
        if (a.dst != b.dst) return a.dst < b.dst;
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        return a.label < b.label;
    });
    doc["edges"] = ojson::array();
    for (const auto& e : edges) {
        ojson j;
        j["src"] = e.src;
        j["dst"] = e.dst;
        j["kind"] = to_string(e.kind);
        if (e.label) j["label"] = *e.label;
        doc["edges"].push_back(std::move(j));
    }

    return doc.dump();
}

void apply_stats_json(SchemaGraph& g, const std::string& text) {
    const ojson doc = ojson::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw FormatError("at /: not valid JSON");
    if (!doc.is_object()) format_fail("/", "expected object keyed by attribute id");
    for (const auto& [id, stats] : doc.items()) {
        if (!g.has_node(id) || g.node_kind(id) != NodeKind::Attribute) {
            throw LinkError("stats sidecar references unknown attribute " + id);
        }
        const std::string path = "/" + id;
        if (!stats.is_object()) format_fail(path, "expected object");
        FeatureRecord rec = g.record(id);
        if (auto it = stats.find("distinct_count"); it != stats.end()) {
            if (!it->is_number_integer()) format_fail(path + "/distinct_count", "expected integer");
            rec.distinct_count = it->get<std::int64_t>();
        }
        if (auto it = stats.find("row_count"); it != stats.end()) {
            if (!it->is_number_integer()) format_fail(path + "/row_count", "expected integer");
            rec.row_count = it->get<std::int64_t>();
        }
        if (auto it = stats.find("null_fraction"); it != stats.end()) {
            if (!it->is_number()) format_fail(path + "/null_fraction", "expected number");
            rec.null_fraction = it->get<double>();
        }
        if (auto it = stats.find("mean_length"); it != stats.end()) {
            if (!it->is_number()) format_fail(path + "/mean_length", "expected number");
            rec.mean_length = it->get<double>();
        }
        g.set_record(id, rec);
    }
}

}  // namespace relrad
