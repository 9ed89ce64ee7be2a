#include "tempo/semcache.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <tuple>

namespace tempo {

const char* to_string(CacheDecision d) {
    switch (d) {
        case CacheDecision::Hit: return "hit";
        case CacheDecision::Miss: return "miss";
        case CacheDecision::Bypass: return "bypass";
    }
    return "?";
}

void CacheConfig::validate() const {
    if (tau_sim < 0 || tau_sim > 1) throw std::invalid_argument("cache: tau_sim not in [0,1]");
    if (tau_judge < 0 || tau_judge > 1) throw std::invalid_argument("cache: tau_judge not in [0,1]");
    if (tau_judge < tau_sim)
        throw std::invalid_argument("cache: tau_judge must be >= tau_sim");
    if (top_k <= 0) throw std::invalid_argument("cache: top_k must be positive");
    if (capacity <= 0) throw std::invalid_argument("cache: capacity must be positive");
    if (embedding_dim <= 0) throw std::invalid_argument("cache: embedding_dim must be positive");
}

SemanticCache::SemanticCache(CacheConfig config, std::shared_ptr<const Embedder> embedder,
                             std::shared_ptr<const Judger> judger,
                             std::function<UtcSeconds()> clock)
    : config_(config), embedder_(std::move(embedder)), judger_(std::move(judger)),
      clock_(std::move(clock)) {
    config_.validate();
    if (!embedder_ || !judger_) throw std::invalid_argument("cache: embedder/judger required");
    if (embedder_->dim() != config_.embedding_dim)
        throw std::invalid_argument("cache: embedder dim does not match config");
    if (!clock_) {
        clock_ = [] {
            return std::chrono::time_point_cast<std::chrono::seconds>(
                std::chrono::system_clock::now());
        };
    }
}

bool SemanticCache::window_compatible(const std::optional<TimeWindow>& entry_window,
                                      const std::optional<TimeWindow>& query_window) {
    if (!entry_window && !query_window) return true;
    if (entry_window && query_window) return same_day_window(*entry_window, *query_window);
    return false;
}

LookupOutcome SemanticCache::lookup(const ClassifiedQuery& cq) {
    LookupOutcome out;
    if (cq.bucket == TemporalBucket::Volatile) {
        std::lock_guard lock(mu_);
        ++stats_.bypasses;
        out.decision = CacheDecision::Bypass;
        return out;
    }

    std::vector<float> query_emb;
    try {
        query_emb = embedder_->embed(cq.query.text);
    } catch (const std::exception&) {
        std::lock_guard lock(mu_);
        ++stats_.misses;
        out.decision = CacheDecision::Miss;
        out.degraded = true;
        return out;
    }

    std::lock_guard lock(mu_);
    ++stats_.index_reads;

    struct Candidate {
        size_t idx;
        double sim;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i)
        candidates.push_back({i, cosine(entries_[i].embedding, query_emb)});
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return entries_[a.idx].seq < entries_[b.idx].seq;
    });
    if (candidates.size() > size_t(config_.top_k)) candidates.resize(size_t(config_.top_k));

    if (!candidates.empty()) out.similarity = candidates.front().sim;

    // Candidates arrive sorted by (sim desc, seq asc), so keeping the first
    // strictly-best judge score resolves ties toward higher similarity and
    // then toward the older entry.
    size_t best_idx = entries_.size();
    double best_score = -1.0;
    double best_sim = -1.0;
    for (const auto& cand : candidates) {
        if (cand.sim < config_.tau_sim) continue;
        const CacheEntry& e = entries_[cand.idx];
        if (config_.window_gate && !window_compatible(e.window, cq.window)) continue;
        ++stats_.judger_calls;
        double score = judger_->score(e.query_text, e.answer, cq.query.text);
        if (score > best_score) {
            best_idx = cand.idx;
            best_score = score;
            best_sim = cand.sim;
        }
    }

    if (best_idx < entries_.size()) out.judge_score = best_score;
    if (best_idx < entries_.size() && best_score >= config_.tau_judge) {
        CacheEntry& e = entries_[best_idx];
        ++e.hit_count;
        e.last_access = ++tick_;
        ++stats_.hits;
        out.decision = CacheDecision::Hit;
        out.answer = e.answer;
        out.matched_entry = e.entry_id;
        out.similarity = best_sim;
        return out;
    }

    ++stats_.misses;
    out.decision = CacheDecision::Miss;
    return out;
}

std::string SemanticCache::insert(const ClassifiedQuery& cq, const std::string& answer) {
    if (cq.bucket != TemporalBucket::Static && cq.bucket != TemporalBucket::Anchored)
        throw std::invalid_argument("cache: only static/anchored queries are cacheable, got " +
                                    std::string(to_string(cq.bucket)));

    std::vector<float> emb = embedder_->embed(cq.query.text);

    std::lock_guard lock(mu_);
    if (entries_.size() >= size_t(config_.capacity)) evict_one_locked();

    CacheEntry e;
    e.seq = next_seq_++;
    e.entry_id = "e" + std::to_string(e.seq);
    e.query_text = cq.query.text;
    e.embedding = std::move(emb);
    e.answer = answer;
    e.window = cq.window;
    e.hit_count = 0;
    e.last_access = ++tick_;
    e.inserted_at = clock_();
    std::string id = e.entry_id;
    entries_.push_back(std::move(e));
    ++stats_.index_writes;
    ++stats_.inserts;
    return id;
}

size_t SemanticCache::victim_index_locked() const {
    size_t victim = 0;
    for (size_t i = 1; i < entries_.size(); ++i) {
        auto key = [](const CacheEntry& e) {
            return std::make_tuple(e.hit_count, e.last_access,
                                   e.inserted_at.time_since_epoch().count(), e.seq);
        };
        if (key(entries_[i]) < key(entries_[victim])) victim = i;
    }
    return victim;
}

std::string SemanticCache::evict_one_locked() {
    if (entries_.empty()) throw std::logic_error("cache: evict on empty cache");
    size_t victim = victim_index_locked();
    std::string id = entries_[victim].entry_id;
    entries_.erase(entries_.begin() + long(victim));
    ++stats_.evictions;
    return id;
}

std::string SemanticCache::evict_one() {
    std::lock_guard lock(mu_);
    return evict_one_locked();
}

std::vector<std::pair<std::string, double>> SemanticCache::top_candidates(const std::string& text,
                                                                          int k) const {
    std::vector<float> emb = embedder_->embed(text);
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, double>> out;
    std::vector<size_t> idx(entries_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> sims(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) sims[i] = cosine(entries_[i].embedding, emb);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return entries_[a].seq < entries_[b].seq;
    });
    for (size_t i = 0; i < idx.size() && int(i) < k; ++i)
        out.emplace_back(entries_[idx[i]].entry_id, sims[idx[i]]);
    return out;
}

size_t SemanticCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

CacheStats SemanticCache::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

std::vector<CacheEntry> SemanticCache::entries_snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
}

void SemanticCache::set_entry_counters(const std::string& entry_id, uint64_t hit_count,
                                       uint64_t last_access, UtcSeconds inserted_at) {
    std::lock_guard lock(mu_);
    for (auto& e : entries_) {
        if (e.entry_id == entry_id) {
            e.hit_count = hit_count;
            e.last_access = last_access;
            e.inserted_at = inserted_at;
            return;
        }
    }
    throw std::invalid_argument("cache: no entry " + entry_id);
}

}  // namespace tempo
