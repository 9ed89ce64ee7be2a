#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "tempo/time_util.hpp"

namespace tempo {

enum class TemporalBucket { Volatile, Static, Relative, Anchored };

const char* to_string(TemporalBucket b);

/// Half-open [start, end) interval in UTC.
struct TimeWindow {
    UtcSeconds start;
    UtcSeconds end;

    bool valid() const { return start < end; }
    bool operator==(const TimeWindow&) const = default;
};

// True iff both windows cover the same UTC calendar days (same start day,
// same end day).
bool same_day_window(const TimeWindow& a, const TimeWindow& b);

struct Query {
    std::string id;
    std::string text;
    UtcSeconds issued_at;
    std::string parent_id;  // evaluation ground truth only; may be empty
};

struct ClassifiedQuery {
    Query query;
    TemporalBucket bucket = TemporalBucket::Static;
    std::optional<TimeWindow> window;
};

/// Ordered-rule-table classifier over query text, plus resolution of
/// relative/anchored time expressions into concrete UTC windows.
///
/// Rule table format: one rule per line, `<bucket>\t<pattern>` where bucket is
/// volatile|anchored|relative and pattern is an ECMAScript regex matched
/// case-insensitively anywhere in the text. Lines starting with `#` and blank
/// lines are skipped. Rules apply top-down, first match wins; no match means
/// Static.
class TemporalClassifier {
public:
    static TemporalClassifier from_file(const std::filesystem::path& path);
    static TemporalClassifier from_stream(std::istream& in, const std::string& origin);

    TemporalBucket classify(const std::string& text) const;

    // Only meaningful for Relative and Anchored buckets. Absence of a window
    // is the defined fallback for unparseable anchored phrases, never an
    // error.
    std::optional<TimeWindow> resolve_window(TemporalBucket bucket, const std::string& text,
                                             UtcSeconds issued_at) const;

    // Relative queries never escape: resolved ones become Anchored, the rest
    // demote to Volatile.
    ClassifiedQuery classify_and_resolve(const Query& query) const;

    size_t rule_count() const { return rules_.size(); }

private:
    struct Rule {
        TemporalBucket bucket;
        std::regex pattern;
        std::string source;
    };
    std::vector<Rule> rules_;
};

// Resolution grammar, exposed for direct testing. All calendar math is UTC.
std::optional<TimeWindow> resolve_relative_phrase(const std::string& text, UtcSeconds issued_at);
std::optional<TimeWindow> resolve_anchored_phrase(const std::string& text);

}  // namespace tempo
