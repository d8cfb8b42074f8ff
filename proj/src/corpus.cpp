#include "peerreview/corpus.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "peerreview/errors.hpp"
#include "peerreview/xml.hpp"

namespace peerreview {

namespace {

using nlohmann::json;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
bool is_non_ascii(char c) { return (static_cast<unsigned char>(c) & 0x80) != 0; }

char ascii_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        const auto start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// First UTF-8 code point of `s`, lowercased if ASCII.
std::string first_code_point(std::string_view s) {
    if (s.empty()) return {};
    std::size_t len = 1;
    while (len < s.size() && (static_cast<unsigned char>(s[len]) & 0xC0) == 0x80) ++len;
    std::string cp(s.substr(0, len));
    cp[0] = ascii_lower(cp[0]);
    return cp;
}

std::string strip_dots(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != '.') out += c;
    }
    return out;
}

std::vector<std::string> initials_of(std::string_view given) {
    std::vector<std::string> out;
    for (auto word : split_ws(given)) {
        if (word.find('-') != std::string_view::npos) {
            std::vector<std::string> group;
            std::size_t start = 0;
            while (start <= word.size()) {
                auto dash = word.find('-', start);
                if (dash == std::string_view::npos) dash = word.size();
                const auto seg = strip_dots(word.substr(start, dash - start));
                if (!seg.empty()) group.push_back(first_code_point(seg) + ".");
                start = dash + 1;
            }
            if (!group.empty()) out.push_back(join(group, "-"));
            continue;
        }
        std::size_t start = 0;
        while (start < word.size()) {
            auto dot = word.find('.', start);
            if (dot == std::string_view::npos) dot = word.size();
            const auto piece = word.substr(start, dot - start);
            if (!piece.empty()) out.push_back(first_code_point(piece) + ".");
            start = dot + 1;
        }
    }
    return out;
}

std::string collapse(std::string_view s) {
    std::vector<std::string> parts;
    for (auto t : split_ws(s)) parts.emplace_back(t);
    return join(parts, " ");
}

// --- reference parsing -----------------------------------------------------

bool is_initial_token(std::string_view t) {
    // "M.", "m.", "M.E.J.", "J.-P."
    if (t.size() < 2 || t.back() != '.') return false;
    bool expect_letter = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const char c = t[i];
        if (expect_letter) {
            if (!is_alpha(c)) return false;
            expect_letter = false;
        } else if (c == '.') {
            if (i + 1 < t.size() && t[i + 1] == '-') ++i;
            expect_letter = true;
        } else {
            return false;
        }
    }
    return expect_letter;
}

bool is_particle(std::string_view t) {
    static constexpr std::array<std::string_view, 14> particles = {
        "van", "von", "de", "der", "den", "del", "della", "da", "di", "du", "la", "le", "dos", "ter"};
    return std::find(particles.begin(), particles.end(), t) != particles.end();
}

bool is_capitalized_word(std::string_view t) {
    if (t.size() < 2) return false;
    if (!is_upper(t[0]) && !is_non_ascii(t[0])) return false;
    for (char c : t.substr(1)) {
        if (!is_alpha(c) && !is_non_ascii(c) && c != '-' && c != '\'') return false;
    }
    return true;
}

bool is_name_segment(std::string_view segment) {
    const auto tokens = split_ws(segment);
    if (tokens.size() < 2 || tokens.size() > 6) return false;
    bool has_initial = false;
    bool has_word = false;
    for (auto t : tokens) {
        if (is_initial_token(t)) {
            has_initial = true;
        } else if (is_capitalized_word(t)) {
            has_word = true;
        } else if (!is_particle(t)) {
            return false;
        }
    }
    return has_initial && has_word;
}

bool is_initials_only(std::string_view segment) {
    const auto tokens = split_ws(segment);
    if (tokens.empty()) return false;
    return std::all_of(tokens.begin(), tokens.end(), is_initial_token);
}

std::string_view strip_numbering(std::string_view s) {
    s = xml::trim(s);
    if (!s.empty() && s[0] == '-') s = xml::trim(s.substr(1));
    if (!s.empty() && s[0] == '[') {
        const auto close = s.find(']');
        if (close != std::string_view::npos &&
            std::all_of(s.begin() + 1, s.begin() + static_cast<std::ptrdiff_t>(close),
                        [](char c) { return c >= '0' && c <= '9'; })) {
            s = xml::trim(s.substr(close + 1));
        }
    }
    return s;
}

// Splits on commas, then splits each piece on " and " / " & ".
std::vector<std::string> name_segments(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        std::string piece(xml::trim(s.substr(start, comma - start)));
        for (;;) {
            std::size_t cut = std::string::npos;
            std::size_t cut_len = 0;
            for (std::string_view conj : {std::string_view(" and "), std::string_view(" & ")}) {
                const auto p = piece.find(conj);
                if (p != std::string::npos && p < cut) {
                    cut = p;
                    cut_len = conj.size();
                }
            }
            if (piece.rfind("and ", 0) == 0) {
                piece = std::string(xml::trim(std::string_view(piece).substr(4)));
                continue;
            }
            if (cut == std::string::npos) break;
            out.emplace_back(xml::trim(std::string_view(piece).substr(0, cut)));
            piece = std::string(xml::trim(std::string_view(piece).substr(cut + cut_len)));
        }
        out.push_back(std::move(piece));
        start = comma + 1;
    }
    return out;
}

// --- json ------------------------------------------------------------------

json author_json(const AuthorKey& a) { return json{{"canonical", a.canonical}, {"display", a.display}}; }

// Plain strings are display names and get normalized.
AuthorKey author_from_json(const json& j) {
    if (j.is_string()) return normalize_author_name(j.get<std::string>());
    return AuthorKey{j.at("canonical").get<std::string>(), j.at("display").get<std::string>()};
}

void add_unique(std::vector<AuthorKey>& authors, AuthorKey key) {
    const bool seen = std::any_of(authors.begin(), authors.end(),
                                  [&](const AuthorKey& a) { return a.canonical == key.canonical; });
    if (!seen) authors.push_back(std::move(key));
}

bool starts_with_journal_ref(std::string_view s) {
    constexpr std::string_view prefix = "journal-ref:";
    return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == prefix;
}

PaperRecord record_from_element(const xml::Element& rec) {
    PaperRecord out;
    const auto* header = rec.child("header");
    if (header == nullptr) throw SchemaError("record has no <header>");
    const auto* metadata = rec.child("metadata");
    if (metadata == nullptr) throw SchemaError("record has no <metadata>");

    if (const auto* id = header->child("identifier")) out.identifier = std::string(xml::trim(id->text));
    if (out.identifier.empty()) throw SchemaError("record header has no identifier");
    if (const auto* ds = header->child("datestamp")) out.datestamp = std::string(xml::trim(ds->text));
    for (const auto* set : header->children_named("setSpec")) out.set_specs.emplace_back(xml::trim(set->text));

    const auto* dc = metadata->find("dc");
    const xml::Element& scope = dc != nullptr ? *dc : *metadata;
    if (const auto* title = scope.child("title")) out.title = std::string(xml::trim(title->text));
    for (const auto* creator : scope.children_named("creator")) {
        const auto name = xml::trim(creator->text);
        if (!name.empty()) add_unique(out.authors, normalize_author_name(name));
    }
    for (const auto* subject : scope.children_named("subject")) {
        std::string s(xml::trim(subject->text));
        if (starts_with_journal_ref(s)) out.journal_ref_present = true;
        out.subjects.push_back(std::move(s));
    }
    for (const auto* date : scope.children_named("date")) out.date_stamps.emplace_back(xml::trim(date->text));
    for (const auto* ref : scope.children_named("references")) {
        const auto text = xml::trim(ref->text);
        if (!text.empty()) out.references.push_back(parse_reference(text));
    }
    if (metadata->find("journal-ref") != nullptr) out.journal_ref_present = true;
    return out;
}

bool is_deleted(const xml::Element& record) {
    const auto* header = record.child("header");
    return header != nullptr && header->attribute("status").value_or("") == "deleted";
}

// Deleted records carry no metadata and are skipped.
std::vector<const xml::Element*> record_elements(const xml::Element& root) {
    std::vector<const xml::Element*> all;
    if (root.local_name() == "record") {
        all.push_back(&root);
    } else {
        all = root.find_all("record");
    }
    std::erase_if(all, [](const xml::Element* r) { return is_deleted(*r); });
    return all;
}

} // namespace

AuthorKey normalize_author_name(std::string_view display) {
    const std::string flat = collapse(display);
    if (flat.empty()) throw ValidationError("author name is empty");

    std::string surname;
    std::string given;
    const auto comma = flat.find(',');
    if (comma != std::string::npos && !xml::trim(std::string_view(flat).substr(0, comma)).empty()) {
        surname = std::string(xml::trim(std::string_view(flat).substr(0, comma)));
        given = flat.substr(comma + 1);
        std::replace(given.begin(), given.end(), ',', ' ');
    } else {
        std::string rest = flat;
        std::replace(rest.begin(), rest.end(), ',', ' ');
        const auto tokens = split_ws(rest);
        surname = std::string(tokens.back());
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            given += tokens[i];
            given += ' ';
        }
    }

    const auto initials = initials_of(given);
    std::string canonical = lower(surname);
    if (!initials.empty()) canonical += ", " + join(initials, " ");
    return AuthorKey{std::move(canonical), std::string(display)};
}

CitedWork parse_reference(std::string_view line) {
    CitedWork work;
    work.raw = std::string(line);

    const auto segments = name_segments(strip_numbering(line));
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto seg = segments[i];
        if (seg.rfind("et al", 0) == 0) break;
        // "B. Bravo et al." ends the author list after this name.
        const auto etal = seg.find(" et al");
        if (etal != std::string::npos) {
            seg = std::string(xml::trim(seg.substr(0, etal)));
            if (is_name_segment(seg)) add_unique(work.authors, normalize_author_name(seg));
            break;
        }
        if (is_name_segment(seg)) {
            add_unique(work.authors, normalize_author_name(seg));
            continue;
        }
        // "Newman, M. E. J., ..." splits the surname from its initials.
        if (is_capitalized_word(seg) && i + 1 < segments.size() && is_initials_only(segments[i + 1])) {
            add_unique(work.authors, normalize_author_name(seg + ", " + segments[i + 1]));
            ++i;
            continue;
        }
        break;
    }
    return work;
}

std::vector<CitedWork> parse_reference_list(std::string_view text) {
    std::vector<CitedWork> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!xml::trim(line).empty()) out.push_back(parse_reference(line));
        start = nl + 1;
    }
    return out;
}

PaperRecord parse_dc_record(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    const auto recs = record_elements(root);
    if (recs.empty()) throw SchemaError("document contains no <record>");
    return record_from_element(*recs.front());
}

std::vector<PaperRecord> parse_dc_records(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    std::vector<PaperRecord> out;
    for (const auto* rec : record_elements(root)) out.push_back(record_from_element(*rec));
    return out;
}

std::vector<HarvestedRecord> extract_records(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    std::vector<HarvestedRecord> out;
    for (const auto* rec : record_elements(root)) {
        out.push_back(HarvestedRecord{
            record_from_element(*rec),
            std::string(xml_text.substr(rec->begin_offset, rec->end_offset - rec->begin_offset))});
    }
    return out;
}

std::string render_dc_record(const PaperRecord& record) {
    std::ostringstream out;
    out << "<record>\n  <header>\n"
        << "    <identifier>" << xml::escape_text(record.identifier) << "</identifier>\n";
    if (!record.datestamp.empty()) out << "    <datestamp>" << xml::escape_text(record.datestamp) << "</datestamp>\n";
    for (const auto& set : record.set_specs) out << "    <setSpec>" << xml::escape_text(set) << "</setSpec>\n";
    out << "  </header>\n  <metadata>\n"
        << "    <oai_dc:dc xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\""
           " xmlns:dc=\"http://purl.org/dc/elements/1.1/\" xmlns:dcterms=\"http://purl.org/dc/terms/\">\n";
    if (!record.title.empty()) out << "      <dc:title>" << xml::escape_text(record.title) << "</dc:title>\n";
    for (const auto& a : record.authors) out << "      <dc:creator>" << xml::escape_text(a.display) << "</dc:creator>\n";
    bool journal_ref_in_subjects = false;
    for (const auto& s : record.subjects) {
        journal_ref_in_subjects = journal_ref_in_subjects || starts_with_journal_ref(s);
        out << "      <dc:subject>" << xml::escape_text(s) << "</dc:subject>\n";
    }
    for (const auto& d : record.date_stamps) out << "      <dc:date>" << xml::escape_text(d) << "</dc:date>\n";
    for (const auto& r : record.references) {
        out << "      <dcterms:references>" << xml::escape_text(r.raw) << "</dcterms:references>\n";
    }
    if (record.journal_ref_present && !journal_ref_in_subjects) out << "      <journal-ref/>\n";
    out << "    </oai_dc:dc>\n  </metadata>\n</record>\n";
    return out.str();
}

std::string record_to_json_line(const PaperRecord& r) {
    json j;
    j["identifier"] = r.identifier;
    j["title"] = r.title;
    j["authors"] = json::array();
    for (const auto& a : r.authors) j["authors"].push_back(author_json(a));
    j["references"] = json::array();
    for (const auto& ref : r.references) {
        json jr{{"raw", ref.raw}, {"authors", json::array()}};
        for (const auto& a : ref.authors) jr["authors"].push_back(author_json(a));
        j["references"].push_back(std::move(jr));
    }
    j["dates"] = r.date_stamps;
    j["subjects"] = r.subjects;
    j["journal_ref"] = r.journal_ref_present;
    j["datestamp"] = r.datestamp;
    j["sets"] = r.set_specs;
    return j.dump();
}

PaperRecord record_from_json_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("corpus line is not valid JSON: ") + e.what(), e.byte);
    }
    try {
        PaperRecord r;
        r.identifier = j.at("identifier").get<std::string>();
        if (r.identifier.empty()) throw SchemaError("corpus record has empty identifier");
        r.title = j.value("title", "");
        for (const auto& a : j.at("authors")) add_unique(r.authors, author_from_json(a));
        for (const auto& jr : j.value("references", json::array())) {
            if (jr.is_string()) {
                r.references.push_back(parse_reference(jr.get<std::string>()));
                continue;
            }
            CitedWork w;
            w.raw = jr.at("raw").get<std::string>();
            for (const auto& a : jr.at("authors")) w.authors.push_back(author_from_json(a));
            r.references.push_back(std::move(w));
        }
        r.date_stamps = j.value("dates", std::vector<std::string>{});
        r.subjects = j.value("subjects", std::vector<std::string>{});
        r.journal_ref_present = j.value("journal_ref", false);
        r.datestamp = j.value("datestamp", "");
        r.set_specs = j.value("sets", std::vector<std::string>{});
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("corpus record: ") + e.what());
    }
}

void write_corpus(std::ostream& out, const std::vector<PaperRecord>& records) {
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

std::vector<PaperRecord> read_corpus(std::istream& in) {
    std::vector<PaperRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (xml::trim(line).empty()) continue;
        out.push_back(record_from_json_line(line));
    }
    return out;
}

std::vector<PaperRecord> load_corpus(const std::string& path) {
    namespace fs = std::filesystem;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error("cannot open " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const fs::path p(path);
    if (fs::is_directory(p)) {
        std::set<fs::path> files;
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_regular_file() && entry.path().extension() == ".xml") files.insert(entry.path());
        }
        std::vector<PaperRecord> out;
        for (const auto& f : files) {
            auto recs = parse_dc_records(slurp(f));
            out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
        }
        return out;
    }
    if (p.extension() == ".jsonl" || p.extension() == ".json") {
        std::ifstream in(p);
        if (!in) throw Error("cannot open " + path);
        return read_corpus(in);
    }
    return parse_dc_records(slurp(p));
}

} // namespace peerreview
