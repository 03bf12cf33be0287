#pragma once

#include <optional>
#include <string>
#include <vector>

namespace simbridge::xml {

// Minimal strict XML reader for the MJCF subset this project emits:
// elements, double-quoted attributes, self-closing tags, comments, and an
// optional declaration. Text content other than whitespace is rejected.
struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<Node> children;
    int line = 0;

    const std::string* attr(const std::string& key) const;
    const Node* child(const std::string& name) const;
    std::vector<const Node*> children_named(const std::string& name) const;
};

// Throws simbridge::ParseError with line context on malformed input.
Node parse(const std::string& text);

std::string escape(const std::string& value);

} // namespace simbridge::xml
