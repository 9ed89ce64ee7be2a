#include "tempo/temporal.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tempo {

using namespace std::chrono;

const char* to_string(TemporalBucket b) {
    switch (b) {
        case TemporalBucket::Volatile: return "volatile";
        case TemporalBucket::Static: return "static";
        case TemporalBucket::Relative: return "relative";
        case TemporalBucket::Anchored: return "anchored";
    }
    return "?";
}

bool same_day_window(const TimeWindow& a, const TimeWindow& b) {
    return day_of(a.start) == day_of(b.start) && day_of(a.end) == day_of(b.end);
}

namespace {

TemporalBucket bucket_from_name(const std::string& name, const std::string& origin, int line_no) {
    if (name == "volatile") return TemporalBucket::Volatile;
    if (name == "anchored") return TemporalBucket::Anchored;
    if (name == "relative") return TemporalBucket::Relative;
    if (name == "static") return TemporalBucket::Static;
    throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                             ": unknown bucket '" + name + "'");
}

const std::regex& relative_count_re() {
    static const std::regex re(R"((past|last)\s+(\d{1,4})\s+(hour|day)s?)", std::regex::icase);
    return re;
}

const std::regex& iso_date_re() {
    static const std::regex re(R"((\d{4})-(\d{2})-(\d{2}))");
    return re;
}

bool contains_word(const std::string& text, const char* phrase) {
    std::regex re("\\b" + std::string(phrase) + "\\b", std::regex::icase);
    return std::regex_search(text, re);
}

}  // namespace

TemporalClassifier TemporalClassifier::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("temporal: cannot open rule table " + path.string());
    return from_stream(in, path.string());
}

TemporalClassifier TemporalClassifier::from_stream(std::istream& in, const std::string& origin) {
    TemporalClassifier c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected <bucket>\\t<pattern>");
        std::string bucket_name = line.substr(0, tab);
        std::string pattern = line.substr(tab + 1);
        if (pattern.empty())
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty pattern");
        Rule r;
        r.bucket = bucket_from_name(bucket_name, origin, line_no);
        r.pattern = std::regex(pattern, std::regex::icase | std::regex::ECMAScript);
        r.source = pattern;
        c.rules_.push_back(std::move(r));
    }
    if (c.rules_.empty()) throw std::runtime_error(origin + ": rule table has no rules");
    return c;
}

TemporalBucket TemporalClassifier::classify(const std::string& text) const {
    for (const auto& rule : rules_) {
        if (std::regex_search(text, rule.pattern)) return rule.bucket;
    }
    return TemporalBucket::Static;
}

std::optional<TimeWindow> resolve_relative_phrase(const std::string& text, UtcSeconds issued_at) {
    sys_days today = day_of(issued_at);

    std::smatch m;
    if (std::regex_search(text, m, relative_count_re())) {
        long n = std::stol(m[2].str());
        if (n <= 0) return std::nullopt;
        std::string unit = m[3].str();
        for (auto& ch : unit) ch = char(std::tolower(static_cast<unsigned char>(ch)));
        seconds span = (unit == "hour") ? seconds{hours{n}} : seconds{days{n}};
        return TimeWindow{issued_at - span, issued_at};
    }
    if (contains_word(text, "yesterday"))
        return TimeWindow{UtcSeconds{today - days{1}}, UtcSeconds{today}};
    if (contains_word(text, "today"))
        return TimeWindow{UtcSeconds{today}, UtcSeconds{today + days{1}}};
    if (std::regex_search(text, std::regex(R"(\blast\s+week\b)", std::regex::icase))) {
        sys_days monday = monday_on_or_before(today);
        return TimeWindow{UtcSeconds{monday - days{7}}, UtcSeconds{monday}};
    }
    if (std::regex_search(text, std::regex(R"(\blast\s+month\b)", std::regex::icase))) {
        sys_days first = first_of_month(today);
        sys_days prev_first = first_of_month(first - days{1});
        return TimeWindow{UtcSeconds{prev_first}, UtcSeconds{first}};
    }
    return std::nullopt;
}

std::optional<TimeWindow> resolve_anchored_phrase(const std::string& text) {
    std::vector<sys_days> dates;
    auto begin = std::sregex_iterator(text.begin(), text.end(), iso_date_re());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        auto d = parse_iso_date(it->str());
        if (!d) return std::nullopt;  // looks like a date but is not a valid one
        dates.push_back(*d);
        if (dates.size() == 2) break;
    }
    if (dates.empty()) return std::nullopt;  // e.g. "June 2020": anchored, no window
    if (dates.size() == 1)
        return TimeWindow{UtcSeconds{dates[0]}, UtcSeconds{dates[0] + days{1}}};
    // Range with the end date inclusive by day.
    if (dates[1] < dates[0]) return std::nullopt;
    return TimeWindow{UtcSeconds{dates[0]}, UtcSeconds{dates[1] + days{1}}};
}

std::optional<TimeWindow> TemporalClassifier::resolve_window(TemporalBucket bucket,
                                                             const std::string& text,
                                                             UtcSeconds issued_at) const {
    switch (bucket) {
        case TemporalBucket::Relative: return resolve_relative_phrase(text, issued_at);
        case TemporalBucket::Anchored: return resolve_anchored_phrase(text);
        default: return std::nullopt;
    }
}

ClassifiedQuery TemporalClassifier::classify_and_resolve(const Query& query) const {
    ClassifiedQuery out;
    out.query = query;
    out.bucket = classify(query.text);
    if (out.bucket == TemporalBucket::Relative) {
        out.window = resolve_relative_phrase(query.text, query.issued_at);
        // Never serve a stale relative answer: unresolved relative queries are
        // treated as live-state.
        out.bucket = out.window ? TemporalBucket::Anchored : TemporalBucket::Volatile;
    } else if (out.bucket == TemporalBucket::Anchored) {
        out.window = resolve_anchored_phrase(query.text);
    }
    return out;
}

}  // namespace tempo
