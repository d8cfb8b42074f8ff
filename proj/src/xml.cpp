#include "peerreview/xml.hpp"

#include <expat.h>

#include <memory>

#include "peerreview/errors.hpp"

namespace peerreview::xml {

namespace {

struct BuildState {
    XML_Parser parser = nullptr;
    std::vector<Element*> stack;
    Element root_holder;
    bool have_root = false;
    // Start-tag extent of the innermost open element, for empty elements
    // where expat reports a zero-length end event.
    std::vector<std::pair<std::size_t, std::size_t>> start_extent;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto* st = static_cast<BuildState*>(user);
    Element el;
    el.name = name;
    for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
        el.attributes.emplace_back(attrs[i], attrs[i + 1]);
    }
    const auto begin = static_cast<std::size_t>(XML_GetCurrentByteIndex(st->parser));
    const auto count = static_cast<std::size_t>(XML_GetCurrentByteCount(st->parser));
    el.begin_offset = begin;

    Element* placed = nullptr;
    if (st->stack.empty()) {
        st->root_holder = std::move(el);
        st->have_root = true;
        placed = &st->root_holder;
    } else {
        auto& siblings = st->stack.back()->children;
        siblings.push_back(std::move(el));
        placed = &siblings.back();
    }
    st->stack.push_back(placed);
    st->start_extent.emplace_back(begin, count);
}

void on_end(void* user, const XML_Char*) {
    auto* st = static_cast<BuildState*>(user);
    const auto index = static_cast<std::size_t>(XML_GetCurrentByteIndex(st->parser));
    const auto count = static_cast<std::size_t>(XML_GetCurrentByteCount(st->parser));
    Element* el = st->stack.back();
    const auto [start_begin, start_count] = st->start_extent.back();
    el->end_offset = count == 0 ? start_begin + start_count : index + count;
    st->stack.pop_back();
    st->start_extent.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
    auto* st = static_cast<BuildState*>(user);
    if (!st->stack.empty()) {
        st->stack.back()->text.append(s, static_cast<std::size_t>(len));
    }
}

struct ParserDeleter {
    void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

} // namespace

std::string_view local_name(std::string_view qualified) {
    const auto colon = qualified.rfind(':');
    return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

std::string_view Element::local_name() const { return xml::local_name(name); }

std::optional<std::string> Element::attribute(std::string_view attr) const {
    for (const auto& [k, v] : attributes) {
        if (k == attr) return v;
    }
    return std::nullopt;
}

const Element* Element::child(std::string_view local) const {
    for (const auto& c : children) {
        if (c.local_name() == local) return &c;
    }
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view local) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c.local_name() == local) out.push_back(&c);
    }
    return out;
}

const Element* Element::find(std::string_view local) const {
    for (const auto& c : children) {
        if (c.local_name() == local) return &c;
        if (const auto* hit = c.find(local)) return hit;
    }
    return nullptr;
}

std::vector<const Element*> Element::find_all(std::string_view local) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c.local_name() == local) out.push_back(&c);
        auto nested = c.find_all(local);
        out.insert(out.end(), nested.begin(), nested.end());
    }
    return out;
}

Element parse(std::string_view document) {
    std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
    if (!parser) throw InternalError("could not allocate XML parser");

    BuildState state;
    state.parser = parser.get();
    XML_SetUserData(parser.get(), &state);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_text);

    const auto status = XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()), 1);
    if (status != XML_STATUS_OK) {
        const auto offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser.get()));
        throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                         offset);
    }
    if (!state.have_root) throw ParseError("document has no root element", 0);
    return std::move(state.root_holder);
}

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string escape_attribute(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '"': out += "&quot;"; break;
        case '\n': out += "&#10;"; break;
        case '\t': out += "&#9;"; break;
        case '\r': out += "&#13;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

} // namespace peerreview::xml
