#pragma once

#include <string>

#include "tempo/planner.hpp"
#include "tempo/scoring.hpp"

namespace tempo {

// Adapters for external HTTP scorer/model endpoints behind the same
// interfaces as the deterministic reference implementations. Configuration-
// selected; excluded from the deterministic test suite. Endpoints:
//   POST /embed    {"text": str}                        -> {"embedding": [..]}
//   POST /judge    {"candidate_query","candidate_answer","new_query"} -> {"score": x}
//   POST /complete {"prompt": str}                      -> {"completion": str}

class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::string base_url, int dim);
    std::vector<float> embed(const std::string& text) const override;
    int dim() const override { return dim_; }

private:
    std::string base_url_;
    int dim_;
};

class HttpJudger final : public Judger {
public:
    explicit HttpJudger(std::string base_url);
    double score(const std::string& cand_query, const std::string& cand_answer,
                 const std::string& new_query) const override;

private:
    std::string base_url_;
};

class HttpModelClient final : public ModelClient {
public:
    explicit HttpModelClient(std::string base_url);
    std::string complete(const std::string& prompt) override;

private:
    std::string base_url_;
};

}  // namespace tempo
