#include "tempo/time_util.hpp"

#include <cctype>
#include <cstdio>

namespace tempo {

namespace {

bool all_digits(const std::string& s, size_t pos, size_t n) {
    if (pos + n > s.size()) return false;
    for (size_t i = pos; i < pos + n; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

std::optional<sys_days> parse_date_at(const std::string& s, size_t pos) {
    if (!all_digits(s, pos, 4) || !all_digits(s, pos + 5, 2) || !all_digits(s, pos + 8, 2))
        return std::nullopt;
    if (s[pos + 4] != '-' || s[pos + 7] != '-') return std::nullopt;
    int y = std::stoi(s.substr(pos, 4));
    int m = std::stoi(s.substr(pos + 5, 2));
    int d = std::stoi(s.substr(pos + 8, 2));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

}  // namespace

std::optional<UtcSeconds> parse_iso8601(const std::string& s) {
    auto date = parse_date_at(s, 0);
    if (!date) return std::nullopt;
    if (s.size() == 10) return UtcSeconds{*date};
    if (s.size() < 19) return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!all_digits(s, 11, 2) || !all_digits(s, 14, 2) || !all_digits(s, 17, 2)) return std::nullopt;
    if (s[13] != ':' || s[16] != ':') return std::nullopt;
    if (s.size() == 20 && s[19] != 'Z') return std::nullopt;
    if (s.size() > 20) return std::nullopt;
    int hh = std::stoi(s.substr(11, 2));
    int mm = std::stoi(s.substr(14, 2));
    int ss = std::stoi(s.substr(17, 2));
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    return UtcSeconds{*date} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
           std::chrono::seconds{ss};
}

std::string format_iso8601(UtcSeconds t) {
    sys_days d = day_of(t);
    auto tod = t - UtcSeconds{d};
    std::chrono::year_month_day ymd{d};
    int hh = int(std::chrono::duration_cast<std::chrono::hours>(tod).count());
    int mm = int(std::chrono::duration_cast<std::chrono::minutes>(tod).count() % 60);
    int ss = int(tod.count() % 60);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), hh, mm, ss);
    return buf;
}

std::optional<sys_days> parse_iso_date(const std::string& s) {
    if (s.size() != 10) return std::nullopt;
    return parse_date_at(s, 0);
}

std::string format_iso_date(sys_days d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

sys_days day_of(UtcSeconds t) { return std::chrono::floor<std::chrono::days>(t); }

sys_days monday_on_or_before(sys_days d) {
    std::chrono::weekday wd{d};
    // c_encoding: Sunday=0 ... Saturday=6; Monday=1.
    unsigned back = (wd.c_encoding() + 6) % 7;
    return d - std::chrono::days{back};
}

sys_days first_of_month(sys_days d) {
    std::chrono::year_month_day ymd{d};
    return sys_days{ymd.year() / ymd.month() / std::chrono::day{1}};
}

}  // namespace tempo
