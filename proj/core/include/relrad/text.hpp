#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relrad {

// ASCII-only lowercasing (schema identifiers are ASCII by construction).
std::string lowercase(const std::string& s);

// Splits an identifier into lowercase word tokens. Boundaries are runs of
// non-alphanumeric characters, digit/letter transitions, and camelCase humps:
// "customerID_fk2" -> {"customer", "id", "fk", "2"}.
std::vector<std::string> tokenize(const std::string& s);

// Character trigrams of the lowercased string, padded with '#' on both ends
// so short names still produce at least one gram ("id" -> {"#id", "id#"}).
std::vector<std::string> trigrams(const std::string& s);

// FNV-1a over the bytes of `s` (64-bit variant).
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t fnv1a64(const void* data, std::size_t n);

// 128-bit FNV-1a, returned as a (hi, lo) pair. Used for neighborhood
// signatures and manifest config hashes where 64 bits of collision margin
// is not comfortable.
struct Hash128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    bool operator==(const Hash128&) const = default;
    bool operator<(const Hash128& o) const {
        return hi != o.hi ? hi < o.hi : lo < o.lo;
    }
};
Hash128 fnv1a128(const void* data, std::size_t n);
Hash128 fnv1a128(const std::string& s);
// Chained form: feeds `s` into an existing state, for incremental hashing.
Hash128 fnv1a128_extend(Hash128 state, const void* data, std::size_t n);

// Renders a Hash128 as 32 lowercase hex digits.
std::string to_hex(const Hash128& h);

// Classic Levenshtein edit distance (unit costs).
int levenshtein(const std::string& a, const std::string& b);

// 1 - lev(a,b)/max(|a|,|b|), and 1.0 when both are empty.
double edit_similarity(const std::string& a, const std::string& b);

// |A ∩ B| / |A ∪ B| over two token sets; 1.0 when both are empty.
double token_jaccard(const std::vector<std::string>& a,
                     const std::vector<std::string>& b);

// Shortest round-trip decimal rendering of a double (std::to_chars). All
// serialized floats go through this so reruns are byte-identical.
std::string fmt_double(double x);

// Locale-independent parse helpers used by the ingest layer.
bool parse_int64(const std::string& s, std::int64_t& out);
bool parse_double(const std::string& s, double& out);

}  // namespace relrad
