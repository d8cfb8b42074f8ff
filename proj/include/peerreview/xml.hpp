#pragma once

// Small DOM over expat. Element names keep their prefix ("dc:creator");
// lookups go by local name so documents using other prefixes still match.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace peerreview::xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    // Character data directly inside this element, concatenated.
    std::string text;
    // Byte range of the element in the source buffer, from '<' of the start
    // tag to one past the closing '>' of the end tag.
    std::size_t begin_offset = 0;
    std::size_t end_offset = 0;

    std::string_view local_name() const;
    std::optional<std::string> attribute(std::string_view name) const;

    const Element* child(std::string_view local) const;
    std::vector<const Element*> children_named(std::string_view local) const;
    // Depth-first search over all descendants (excluding this element).
    const Element* find(std::string_view local) const;
    std::vector<const Element*> find_all(std::string_view local) const;
};

std::string_view local_name(std::string_view qualified);

/// Parses a complete document. Throws ParseError with the byte offset on
/// malformed input.
Element parse(std::string_view document);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

std::string_view trim(std::string_view s);

} // namespace peerreview::xml
