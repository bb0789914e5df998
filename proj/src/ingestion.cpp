#include "archface/ingestion.hpp"

#include "archface/errors.hpp"
#include "archface/io.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

namespace archface {

namespace {

int digits_at(std::string_view s, std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

bool leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool is_ip_literal(std::string_view host) {
    if (!host.empty() && host.front() == '[') return true;
    return !host.empty() &&
           std::all_of(host.begin(), host.end(), [](unsigned char c) { return std::isdigit(c) || c == '.'; });
}

std::string timestamp_for(int year, const char* suffix) {
    std::ostringstream out;
    out.width(4);
    out.fill('0');
    out << year << suffix;
    return out.str();
}

} // namespace

bool valid_timestamp(std::string_view ts) {
    if (ts.size() != 14 ||
        !std::all_of(ts.begin(), ts.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return false;
    }
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const int year = digits_at(ts, 0, 4);
    const int month = digits_at(ts, 4, 2);
    const int day = digits_at(ts, 6, 2);
    if (month < 1 || month > 12 || day < 1) return false;
    const int days = kDays[month - 1] + (month == 2 && leap_year(year) ? 1 : 0);
    return day <= days && digits_at(ts, 8, 2) < 24 && digits_at(ts, 10, 2) < 60 && digits_at(ts, 12, 2) < 60;
}

std::string registrable_domain(std::string_view host) {
    if (is_ip_literal(host)) return std::string(host);
    const auto last = host.rfind('.');
    if (last == std::string_view::npos) return std::string(host);
    const auto second = host.rfind('.', last - 1);
    if (last == 0 || second == std::string_view::npos) return std::string(host);
    return std::string(host.substr(second + 1));
}

ParsedManifest parse_manifest_text(std::string_view text) {
    ParsedManifest out;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++number;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::istringstream fields{std::string(line)};
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(std::move(f));
        if (parts.empty() || parts.front().front() == '#') continue;

        auto reject = [&](std::string reason) {
            out.rejects.push_back({number, std::string(line), std::move(reason)});
        };
        if (parts.size() != 5) {
            reject("expected 5 fields, got " + std::to_string(parts.size()));
            continue;
        }
        const std::string host = url_host(parts[0]);
        if (host.empty()) {
            reject("bad url");
            continue;
        }
        if (!valid_timestamp(parts[1])) {
            reject("bad timestamp");
            continue;
        }
        if (parts[2].find('/') == std::string::npos) {
            reject("bad mime");
            continue;
        }
        std::string mime = parts[2];
        std::transform(mime.begin(), mime.end(), mime.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.records.push_back(
            {parts[0], registrable_domain(host), parts[1], std::move(mime), parts[3], parts[4]});
    }
    return out;
}

ParsedManifest parse_manifest(const std::filesystem::path& path) { return parse_manifest_text(read_text_file(path)); }

std::string format_manifest_line(const ImageRecord& r) {
    return r.url + " " + r.capture_timestamp + " " + r.mime + " " + r.content_digest + " " + r.locator;
}

SearchSpace SearchSpace::for_year(int year, std::set<std::string> domains) {
    if (year < 0 || year > 9999) throw ConfigError("year out of range: " + std::to_string(year));
    SearchSpace space;
    space.allowed_domains = std::move(domains);
    space.start = timestamp_for(year, "0101000000");
    space.end = timestamp_for(year, "1231235959");
    return space;
}

void SearchSpace::validate() const {
    if (!valid_timestamp(start) || !valid_timestamp(end)) throw ConfigError("search space bounds must be 14-digit timestamps");
    if (start > end) throw ConfigError("search space start " + start + " is after end " + end);
}

std::string mime_for_format(std::string_view format) {
    std::string f(format);
    std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (f.find('/') != std::string::npos) return f;
    if (f == "jpeg" || f == "jpg") return "image/jpeg";
    if (f == "png") return "image/png";
    if (f == "gif") return "image/gif";
    if (f == "webp") return "image/webp";
    throw ConfigError("unknown image format '" + f + "'");
}

std::vector<ImageRecord> apply_constraints(std::span<const ImageRecord> records, const SearchSpace& space) {
    space.validate();
    std::vector<ImageRecord> kept;
    std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
                 [&](const ImageRecord& r) { return space.admits(r); });
    return kept;
}

std::vector<ImageRecord> dedupe(std::span<const ImageRecord> records) {
    std::unordered_map<std::string_view, std::size_t> winner;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto [it, inserted] = winner.try_emplace(records[i].content_digest, i);
        if (!inserted && records[i].capture_timestamp < records[it->second].capture_timestamp) it->second = i;
    }
    std::vector<ImageRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (winner.at(records[i].content_digest) == i) out.push_back(records[i]);
    }
    return out;
}

} // namespace archface
