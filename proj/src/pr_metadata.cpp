#include "peerreview/pr_metadata.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "peerreview/errors.hpp"
#include "peerreview/xml.hpp"

namespace peerreview {

namespace {

std::string fixed(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// Two or three decimals: 0.65 -> "0.65", 0.8 -> "0.80", 0.755 -> "0.755".
std::string score_text(double v) {
    auto s = fixed(v, 3);
    if (s.back() == '0') s.pop_back();
    return s;
}

std::vector<std::string_view> comment_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(xml::trim(text.substr(start, nl - start)));
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    while (!lines.empty() && lines.front().empty()) lines.erase(lines.begin());
    return lines;
}

std::string normalize_comment(std::string_view text) {
    std::string out;
    for (auto line : comment_lines(text)) {
        if (!out.empty()) out += '\n';
        out += line;
    }
    return out;
}

double unit_attribute(const xml::Element& el, std::string_view attr, bool required, double fallback = 0.0) {
    const auto value = el.attribute(attr);
    if (!value) {
        if (required) throw SchemaError("<" + el.name + "> is missing attribute '" + std::string(attr) + "'");
        return fallback;
    }
    double v = 0.0;
    const auto text = xml::trim(*value);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw SchemaError("attribute " + std::string(attr) + "=\"" + *value + "\" is not a number");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
        throw SchemaError("attribute " + std::string(attr) + "=\"" + *value + "\" is outside [0,1]");
    }
    return v;
}

bool is_pr_review(const xml::Element& el) { return el.name == "pr:review" || el.local_name() == "review"; }

const xml::Element* find_review(const xml::Element& root) {
    if (is_pr_review(root)) return &root;
    for (const auto* candidate : root.find_all("review")) {
        if (candidate->name.rfind("pr:", 0) == 0) return candidate;
    }
    const auto all = root.find_all("review");
    return all.empty() ? nullptr : all.front();
}

std::size_t line_start(std::string_view text, std::size_t pos) {
    const auto nl = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    return (nl == std::string_view::npos || pos == 0) ? 0 : nl + 1;
}

bool only_spaces(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

} // namespace

MergePolicy parse_merge_policy(std::string_view text) {
    if (text == "full") return MergePolicy::full;
    if (text == "referees-only" || text == "referees_only") return MergePolicy::referees_only;
    if (text == "summary-only" || text == "summary_only") return MergePolicy::summary_only;
    throw ConfigurationError("unknown merge policy '" + std::string(text) + "'");
}

std::string_view to_string(MergePolicy policy) {
    switch (policy) {
    case MergePolicy::full: return "full";
    case MergePolicy::referees_only: return "referees-only";
    case MergePolicy::summary_only: return "summary-only";
    }
    return "full";
}

PrReview to_pr_review(const ReviewRecord& review, bool blind, std::string_view secret) {
    PrReview out;
    out.evaluation = review.evaluation();
    out.stability = review.stability();
    for (const auto& e : review.evaluations()) {
        PrReferee r;
        if (blind) {
            r.name = pseudonymize(e.referee.canonical, review.record_id(), secret);
        } else {
            r.name = e.referee.display.empty() ? e.referee.canonical : e.referee.display;
        }
        r.influence = e.influence;
        r.evaluation = e.evaluation;
        r.comments = e.comments;
        out.referees.push_back(std::move(r));
    }
    return out;
}

std::string render_referee_xml(const PrReferee& referee, bool include_comments, std::size_t indent) {
    const std::string pad(indent, ' ');
    std::string out = pad + "<pr:referee name=\"" + xml::escape_attribute(referee.name) + "\" influence=\"" +
                      fixed(referee.influence, 3) + "\" evaluation=\"" + score_text(referee.evaluation) + "\"";
    if (!include_comments || referee.comments.empty()) return out + " />";

    out += ">\n";
    const std::string comment_pad(indent + 2, ' ');
    const std::string text_pad(indent + 4, ' ');
    for (const auto& c : referee.comments) {
        out += comment_pad + "<pr:comment data=\"" + xml::escape_attribute(c.date) + "\"";
        const auto lines = comment_lines(c.text);
        if (lines.empty()) {
            out += "/>\n";
            continue;
        }
        out += ">\n";
        for (auto line : lines) out += text_pad + xml::escape_text(line) + "\n";
        out += comment_pad + "</pr:comment>\n";
    }
    return out + pad + "</pr:referee>";
}

std::string render_pr_xml(const PrReview& review, MergePolicy policy, std::size_t indent) {
    const std::string pad(indent, ' ');
    std::string out = pad + "<pr:review";
    if (review.evaluation) out += " evaluation=\"" + fixed(*review.evaluation, 3) + "\"";
    out += " stability=\"" + fixed(review.stability, 2) + "\"";
    out += " xmlns:pr=\"" + std::string(kPrNamespace) + "\"";
    if (policy == MergePolicy::summary_only || review.referees.empty()) return out + "/>";

    out += ">\n";
    for (const auto& r : review.referees) {
        out += render_referee_xml(r, policy == MergePolicy::full, indent + 2);
        out += '\n';
    }
    return out + pad + "</pr:review>";
}

std::string render_pr_xml(const ReviewRecord& review, bool blind, std::string_view secret, MergePolicy policy,
                          std::size_t indent) {
    return render_pr_xml(to_pr_review(review, blind, secret), policy, indent);
}

PrReview parse_pr_xml(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    const auto* review_el = find_review(root);
    if (review_el == nullptr) throw SchemaError("no <pr:review> element");

    PrReview out;
    if (review_el->attribute("evaluation")) out.evaluation = unit_attribute(*review_el, "evaluation", true);
    out.stability = unit_attribute(*review_el, "stability", true);

    for (const auto& child : review_el->children) {
        if (child.local_name() != "referee") {
            throw SchemaError("<" + child.name + "> is not allowed directly inside <pr:review>");
        }
        PrReferee r;
        const auto name = child.attribute("name");
        if (!name) throw SchemaError("<pr:referee> is missing attribute 'name'");
        r.name = *name;
        r.influence = unit_attribute(child, "influence", true);
        r.evaluation = unit_attribute(child, "evaluation", true);
        for (const auto& c : child.children) {
            if (c.local_name() != "comment") {
                throw SchemaError("<" + c.name + "> is not allowed inside <pr:referee>");
            }
            auto date = c.attribute("data");
            if (!date) date = c.attribute("date");
            if (!date) throw SchemaError("<pr:comment> needs a 'data' (or 'date') attribute");
            if (!c.children.empty()) throw SchemaError("<pr:comment> must contain text only");
            r.comments.push_back(ReviewComment{*date, normalize_comment(c.text)});
        }
        out.referees.push_back(std::move(r));
    }
    return out;
}

std::string merge_into_record(std::string_view record_xml, const PrReview& review, MergePolicy policy) {
    const auto root = xml::parse(record_xml);
    const xml::Element* record = root.local_name() == "record" ? &root : root.find("record");
    if (record == nullptr) throw SchemaError("document contains no <record>");
    const auto* metadata = record->child("metadata");
    if (metadata == nullptr) throw SchemaError("record has no <metadata>");

    // Edits are applied back to front so earlier offsets stay valid.
    struct Edit {
        std::size_t begin;
        std::size_t end;
        std::string replacement;
    };
    std::vector<Edit> edits;

    const auto close_tag = record_xml.rfind("</", metadata->end_offset - 1);
    const auto close_line = line_start(record_xml, close_tag);
    const auto metadata_line = line_start(record_xml, metadata->begin_offset);
    const auto metadata_indent = metadata->begin_offset - metadata_line;
    const bool own_line = only_spaces(record_xml.substr(close_line, close_tag - close_line));

    const auto fragment = render_pr_xml(review, policy, metadata_indent + 2);
    if (own_line) {
        edits.push_back({close_line, close_line, fragment + "\n"});
    } else {
        edits.push_back({close_tag, close_tag, "\n" + fragment + "\n"});
    }

    for (auto it = metadata->children.rbegin(); it != metadata->children.rend(); ++it) {
        if (!is_pr_review(*it)) continue;
        auto begin = it->begin_offset;
        auto end = it->end_offset;
        const auto ls = line_start(record_xml, begin);
        if (only_spaces(record_xml.substr(ls, begin - ls))) {
            begin = ls;
            if (end < record_xml.size() && record_xml[end] == '\n') ++end;
        }
        edits.push_back({begin, end, {}});
    }

    std::string out(record_xml);
    for (const auto& e : edits) out.replace(e.begin, e.end - e.begin, e.replacement);
    return out;
}

} // namespace peerreview
