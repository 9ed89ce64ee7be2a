#include "tempo/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tempo {

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::string> alnum_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += char(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TrigramEmbedder::TrigramEmbedder(int dim) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("TrigramEmbedder: dim must be positive");
}

std::vector<float> TrigramEmbedder::embed(const std::string& text) const {
    // Normalize: lowercase ASCII, collapse whitespace runs, trim.
    std::string norm;
    norm.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!norm.empty()) pending_space = true;
        } else {
            if (pending_space) {
                norm += ' ';
                pending_space = false;
            }
            norm += char(std::tolower(c));
        }
    }

    std::vector<double> counts(size_t(dim_), 0.0);
    if (norm.size() < 3) {
        counts[fnv1a64(norm) % uint64_t(dim_)] += 1.0;
    } else {
        for (size_t i = 0; i + 3 <= norm.size(); ++i) {
            counts[fnv1a64(std::string_view(norm).substr(i, 3)) % uint64_t(dim_)] += 1.0;
        }
    }

    double norm2 = 0;
    for (double v : counts) norm2 += v * v;
    double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
    std::vector<float> out(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) out[i] = float(counts[i] * inv);
    return out;
}

double JaccardJudger::score(const std::string& cand_query, const std::string& /*cand_answer*/,
                            const std::string& new_query) const {
    auto ta = alnum_tokens(cand_query);
    auto tb = alnum_tokens(new_query);
    std::set<std::string> sa(ta.begin(), ta.end());
    std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    size_t inter = 0;
    for (const auto& t : sa)
        if (sb.count(t)) ++inter;
    size_t uni = sa.size() + sb.size() - inter;
    return double(inter) / double(uni);
}

}  // namespace tempo
