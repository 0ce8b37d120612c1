#include "relrad/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <set>

namespace relrad {

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(lowercase(cur));
            cur.clear();
        }
    };
    char prev = '\0';
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        const auto uc = static_cast<unsigned char>(c);
        if (!std::isalnum(uc)) {
            flush();
            prev = '\0';
            continue;
        }
        const bool digit_flip =
            prev != '\0' && (std::isdigit(uc) != std::isdigit(static_cast<unsigned char>(prev)));
        // camelCase hump: lower->upper, or the last upper of an acronym
        // followed by a lower ("HTTPServer" -> "http" + "server").
        const bool hump =
            prev != '\0' && std::isupper(uc) &&
            (std::islower(static_cast<unsigned char>(prev)) ||
             (i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1]))));
        if (digit_flip || hump) flush();
        cur.push_back(c);
        prev = c;
    }
    flush();
    return tokens;
}

std::vector<std::string> trigrams(const std::string& s) {
    const std::string padded = "#" + lowercase(s) + "#";
    std::vector<std::string> grams;
    if (padded.size() < 3) return grams;
    grams.reserve(padded.size() - 2);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        grams.push_back(padded.substr(i, 3));
    }
    return grams;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x00000100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

namespace {

using u128 = unsigned __int128;

constexpr u128 make_u128(std::uint64_t hi, std::uint64_t lo) {
    return (static_cast<u128>(hi) << 64) | lo;
}

// FNV-1a 128-bit offset basis and prime.
constexpr u128 kFnvBasis128 = make_u128(0x6c62272e07bb0142ULL, 0x62b821756295c58dULL);
constexpr u128 kFnvPrime128 = make_u128(0x0000000001000000ULL, 0x000000000000013bULL);

}  // namespace

Hash128 fnv1a128_extend(Hash128 state, const void* data, std::size_t n) {
    u128 h = make_u128(state.hi, state.lo);
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime128;
    }
    return Hash128{static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)};
}

Hash128 fnv1a128(const void* data, std::size_t n) {
    const Hash128 basis{static_cast<std::uint64_t>(kFnvBasis128 >> 64),
                        static_cast<std::uint64_t>(kFnvBasis128)};
    return fnv1a128_extend(basis, data, n);
}

Hash128 fnv1a128(const std::string& s) { return fnv1a128(s.data(), s.size()); }

std::string to_hex(const Hash128& h) {
    static const char* digits = "0123456789abcdef";
    std::string out(32, '0');
    std::uint64_t parts[2] = {h.hi, h.lo};
    for (int p = 0; p < 2; ++p) {
        for (int i = 0; i < 16; ++i) {
            out[p * 16 + i] = digits[(parts[p] >> (60 - 4 * i)) & 0xF];
        }
    }
    return out;
}

int levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return static_cast<int>(m);
    if (m == 0) return static_cast<int>(n);
    std::vector<int> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double edit_similarity(const std::string& a, const std::string& b) {
    if (a.empty() && b.empty()) return 1.0;
    const double denom = static_cast<double>(std::max(a.size(), b.size()));
    return 1.0 - static_cast<double>(levenshtein(a, b)) / denom;
}

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    const std::set<std::string> sa(a.begin(), a.end());
    const std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string fmt_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;  // 64 bytes always suffice for shortest form
    return std::string(buf, ptr);
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace relrad
