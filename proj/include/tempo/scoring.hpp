#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tempo {

/// Maps text to a unit-norm embedding. Implementations must be deterministic
/// for a fixed configuration and input.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(const std::string& text) const = 0;
    virtual int dim() const = 0;
};

/// Second-stage acceptance scorer over a retrieved candidate. Returns a score
/// in [0, 1]. The reference implementation only looks at the two query texts;
/// the candidate answer is part of the interface for model-backed judgers.
class Judger {
public:
    virtual ~Judger() = default;
    virtual double score(const std::string& cand_query, const std::string& cand_answer,
                         const std::string& new_query) const = 0;
};

double cosine(std::span<const float> a, std::span<const float> b);

// Lowercased maximal [a-z0-9]+ runs.
std::vector<std::string> alnum_tokens(const std::string& text);

uint64_t fnv1a64(std::string_view data);

/// Hashed character-trigram term-frequency embedding, L2-normalized.
/// Text is lowercased (ASCII) and whitespace-collapsed before hashing, so
/// case and spacing variants embed identically. Dependency-free stand-in for
/// an external embedding model; shared sentence frames embed close together.
class TrigramEmbedder final : public Embedder {
public:
    explicit TrigramEmbedder(int dim = 256);
    std::vector<float> embed(const std::string& text) const override;
    int dim() const override { return dim_; }

private:
    int dim_;
};

/// Token-level Jaccard similarity between the candidate query and the new
/// query. Two texts with identical token sets score 1.0; disjoint sets score
/// 0.0; two empty texts are identical and score 1.0.
class JaccardJudger final : public Judger {
public:
    double score(const std::string& cand_query, const std::string& cand_answer,
                 const std::string& new_query) const override;
};

}  // namespace tempo
