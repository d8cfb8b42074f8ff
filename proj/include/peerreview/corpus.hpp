#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace peerreview {

/// Author identity. `canonical` is the normalized "surname, f. m." form used as
/// the graph key; `display` is the name as it appeared in the source.
struct AuthorKey {
    std::string canonical;
    std::string display;

    friend bool operator==(const AuthorKey& a, const AuthorKey& b) { return a.canonical == b.canonical; }
    friend auto operator<=>(const AuthorKey& a, const AuthorKey& b) { return a.canonical <=> b.canonical; }
};

struct CitedWork {
    std::vector<AuthorKey> authors;
    std::string raw;
};

struct PaperRecord {
    std::string identifier;
    std::string title;
    std::vector<AuthorKey> authors;
    std::vector<CitedWork> references;
    std::vector<std::string> date_stamps;
    std::vector<std::string> subjects;
    bool journal_ref_present = false;

    // OAI header fields, when the record came from a harvest.
    std::string datestamp;
    std::vector<std::string> set_specs;
};

/// Trims, collapses whitespace, case-folds ASCII and reduces given names to
/// initials: "Rodriguez, Marko A." -> "rodriguez, m. a.". Names without a
/// comma take the last token as the surname. Throws ValidationError on an
/// empty (or all-whitespace) name.
AuthorKey normalize_author_name(std::string_view display);

/// One reference per line. Blank lines are skipped; a line whose leading
/// tokens are not recognisable author names yields a CitedWork with no authors.
std::vector<CitedWork> parse_reference_list(std::string_view text);

/// Author extraction for a single reference string.
CitedWork parse_reference(std::string_view line);

/// Parses one OAI `<record>` carrying oai_dc metadata. References are read
/// from `dcterms:references` elements.
PaperRecord parse_dc_record(std::string_view xml);

/// Accepts either a single `<record>` document or an OAI-PMH response / any
/// container with `<record>` descendants (e.g. a ListRecords page).
std::vector<PaperRecord> parse_dc_records(std::string_view xml);

/// A parsed record together with the exact bytes of its `<record>` element.
struct HarvestedRecord {
    PaperRecord record;
    std::string raw_xml;
};

std::vector<HarvestedRecord> extract_records(std::string_view xml);

std::string render_dc_record(const PaperRecord& record);

// Line-delimited JSON corpus: one record per line.
void write_corpus(std::ostream& out, const std::vector<PaperRecord>& records);
std::vector<PaperRecord> read_corpus(std::istream& in);

std::string record_to_json_line(const PaperRecord& record);
PaperRecord record_from_json_line(std::string_view line);

/// Loads records from a .jsonl corpus, an XML file, or a directory of XML files.
std::vector<PaperRecord> load_corpus(const std::string& path);

} // namespace peerreview
