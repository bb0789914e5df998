#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace archface {

// (url, capture timestamp) identifies one archived image capture.
struct ImageKey {
    std::string url;
    std::string timestamp;

    friend auto operator<=>(const ImageKey&, const ImageKey&) = default;
    friend bool operator==(const ImageKey&, const ImageKey&) = default;
};

struct ImageRecord {
    std::string url;
    std::string domain;            // registrable domain derived from the URL host
    std::string capture_timestamp; // YYYYMMDDhhmmss, UTC
    std::string mime;
    std::string content_digest;
    std::string locator;           // local path or fetch reference

    ImageKey key() const { return {url, capture_timestamp}; }
    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// 14 digits forming a real calendar date and time of day.
bool valid_timestamp(std::string_view timestamp);

// Last two labels of the host ("img.welt.de" -> "welt.de"). IP literals
// and single-label hosts are returned unchanged. Multi-part public
// suffixes such as "co.uk" are not special-cased.
std::string registrable_domain(std::string_view host);

struct ManifestReject {
    std::size_t line_number = 0;
    std::string line;
    std::string reason;
};

struct ParsedManifest {
    std::vector<ImageRecord> records;
    std::vector<ManifestReject> rejects;
};

// One record per line: `url timestamp mime digest locator`, whitespace
// separated. Blank lines and lines starting with '#' are ignored; anything
// else that does not parse lands in `rejects` with a reason.
ParsedManifest parse_manifest_text(std::string_view text);
ParsedManifest parse_manifest(const std::filesystem::path& path); // IOError if unreadable

std::string format_manifest_line(const ImageRecord& record);

inline const std::set<std::string> kDefaultImageFormats{"image/jpeg", "image/png"};

struct SearchSpace {
    std::set<std::string> allowed_domains;
    std::set<std::string> allowed_formats = kDefaultImageFormats;
    std::string start = "00000101000000";
    std::string end = "99991231235959";

    // [YYYY0101000000, YYYY1231235959]
    static SearchSpace for_year(int year, std::set<std::string> domains);

    // ConfigError when start > end or a bound is not a valid timestamp.
    void validate() const;
    bool admits_domain(const ImageRecord& r) const { return allowed_domains.contains(r.domain); }
    bool admits_format(const ImageRecord& r) const { return allowed_formats.contains(r.mime); }
    bool admits_date(const ImageRecord& r) const {
        return start <= r.capture_timestamp && r.capture_timestamp <= end;
    }
    bool admits(const ImageRecord& r) const { return admits_domain(r) && admits_format(r) && admits_date(r); }
};

// "jpeg"/"jpg" -> image/jpeg, "png" -> image/png, "gif" -> image/gif,
// anything containing '/' is taken as a MIME type already.
std::string mime_for_format(std::string_view format);

std::vector<ImageRecord> apply_constraints(std::span<const ImageRecord> records, const SearchSpace& space);

// One record per content digest; the earliest capture wins, the first
// occurrence wins among equal timestamps, survivors keep input order.
std::vector<ImageRecord> dedupe(std::span<const ImageRecord> records);

} // namespace archface
