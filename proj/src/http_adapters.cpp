#include "tempo/http_adapters.hpp"

#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace tempo {

using nlohmann::json;

namespace {

json post_json(const std::string& base_url, const std::string& path, const json& body) {
    httplib::Client client(base_url);
    client.set_read_timeout(60, 0);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res)
        throw std::runtime_error("http scorer " + base_url + path + ": no response");
    if (res->status != 200)
        throw std::runtime_error("http scorer " + base_url + path + ": status " +
                                 std::to_string(res->status));
    return json::parse(res->body);
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::string base_url, int dim)
    : base_url_(std::move(base_url)), dim_(dim) {}

std::vector<float> HttpEmbedder::embed(const std::string& text) const {
    json res = post_json(base_url_, "/embed", {{"text", text}});
    std::vector<float> out = res.at("embedding").get<std::vector<float>>();
    if (int(out.size()) != dim_)
        throw std::runtime_error("http embedder returned dim " + std::to_string(out.size()) +
                                 ", expected " + std::to_string(dim_));
    return out;
}

HttpJudger::HttpJudger(std::string base_url) : base_url_(std::move(base_url)) {}

double HttpJudger::score(const std::string& cand_query, const std::string& cand_answer,
                         const std::string& new_query) const {
    json res = post_json(base_url_, "/judge",
                         {{"candidate_query", cand_query},
                          {"candidate_answer", cand_answer},
                          {"new_query", new_query}});
    return res.at("score").get<double>();
}

HttpModelClient::HttpModelClient(std::string base_url) : base_url_(std::move(base_url)) {}

std::string HttpModelClient::complete(const std::string& prompt) {
    json res = post_json(base_url_, "/complete", {{"prompt", prompt}});
    return res.at("completion").get<std::string>();
}

}  // namespace tempo
