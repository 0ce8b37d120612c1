#pragma once

#include <string>
#include <vector>

#include "relrad/graph.hpp"

namespace relrad {

// Parses a restricted SQL DDL subset:
//
//   CREATE TABLE name ( col type [, col type]*
//                       [, FOREIGN KEY (col) REFERENCES tbl(col)]* ) ;
//
// Keywords are case-insensitive; `--` starts a line comment. Types map onto
// the five-value DataType enum via a fixed table; unrecognized types become
// Text and append a warning. Common column suffixes (PRIMARY KEY, NOT NULL,
// UNIQUE, AUTO_INCREMENT, DEFAULT <literal>) are accepted and ignored so
// textbook schema exports parse without edits. FK clauses are linked after
// the whole document is read, so forward references are fine.
//
// Throws ParseError on malformed syntax, LinkError on FK references to
// undeclared tables/columns.
SchemaGraph parse_ddl(const std::string& text);
SchemaGraph parse_ddl(const std::string& text, std::vector<std::string>& warnings);

// JSON interchange. Top-level keys: "tables" (list of {name}), "attributes"
// (list of {id, table, name, data_type, distinct_count, row_count,
// null_fraction, mean_length[, marker]}), "edges" (list of {src, dst, kind
// [, label]}). emit_json writes canonical form: sorted tables/attributes/
// edges, fixed key order, so emit(load(emit(g))) == emit(g) byte-for-byte.
// load_json throws FormatError carrying the JSON pointer path of the bad
// element, or LinkError when an edge references a missing node.
SchemaGraph load_json(const std::string& text);
std::string emit_json(const SchemaGraph& g);

// Optional sidecar with column statistics, keyed by attribute id:
//   {"table.attr": {"distinct_count": n, "row_count": n,
//                   "null_fraction": x, "mean_length": x}}
// Fields are individually optional; listed ids must exist (LinkError).
void apply_stats_json(SchemaGraph& g, const std::string& text);

}  // namespace relrad
