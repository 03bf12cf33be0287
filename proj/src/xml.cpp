#include "xml.hpp"

#include "simbridge/errors.hpp"

#include <cctype>
#include <cstring>

namespace simbridge::xml {

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char get() {
        char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
    bool starts_with(const char* s) const { return text.compare(pos, std::strlen(s), s) == 0; }
    void expect(char c) {
        if (eof() || peek() != c) {
            throw ParseError("xml line " + std::to_string(line) + ": expected '" +
                             std::string(1, c) + "'");
        }
        get();
    }
    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
    }
};

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
           c == '.';
}

std::string read_name(Cursor& cur) {
    std::string name;
    while (!cur.eof() && name_char(cur.peek())) name.push_back(cur.get());
    if (name.empty()) {
        throw ParseError("xml line " + std::to_string(cur.line) + ": expected a name");
    }
    return name;
}

std::string unescape(const std::string& raw, int line) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out.push_back(raw[i]);
            continue;
        }
        auto end = raw.find(';', i);
        if (end == std::string::npos) {
            throw ParseError("xml line " + std::to_string(line) + ": unterminated entity");
        }
        const std::string ent = raw.substr(i + 1, end - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else throw ParseError("xml line " + std::to_string(line) + ": unknown entity &" + ent + ";");
        i = end;
    }
    return out;
}

void skip_misc(Cursor& cur) {
    for (;;) {
        cur.skip_ws();
        if (cur.starts_with("<!--")) {
            auto end = cur.text.find("-->", cur.pos);
            if (end == std::string::npos) {
                throw ParseError("xml line " + std::to_string(cur.line) + ": unterminated comment");
            }
            while (cur.pos < end + 3) cur.get();
            continue;
        }
        if (cur.starts_with("<?")) {
            auto end = cur.text.find("?>", cur.pos);
            if (end == std::string::npos) {
                throw ParseError("xml line " + std::to_string(cur.line) +
                                 ": unterminated declaration");
            }
            while (cur.pos < end + 2) cur.get();
            continue;
        }
        return;
    }
}

Node parse_element(Cursor& cur) {
    cur.expect('<');
    Node node;
    node.line = cur.line;
    node.name = read_name(cur);
    for (;;) {
        cur.skip_ws();
        if (cur.eof()) {
            throw ParseError("xml line " + std::to_string(cur.line) + ": unterminated tag <" +
                             node.name + ">");
        }
        if (cur.starts_with("/>")) {
            cur.get();
            cur.get();
            return node;
        }
        if (cur.peek() == '>') {
            cur.get();
            break;
        }
        std::string key = read_name(cur);
        cur.skip_ws();
        cur.expect('=');
        cur.skip_ws();
        cur.expect('"');
        std::string raw;
        while (!cur.eof() && cur.peek() != '"') raw.push_back(cur.get());
        cur.expect('"');
        node.attrs.emplace_back(std::move(key), unescape(raw, node.line));
    }
    // Children until the closing tag.
    for (;;) {
        skip_misc(cur);
        if (cur.eof()) {
            throw ParseError("xml: missing </" + node.name + "> (opened at line " +
                             std::to_string(node.line) + ")");
        }
        if (cur.starts_with("</")) {
            cur.get();
            cur.get();
            std::string closing = read_name(cur);
            if (closing != node.name) {
                throw ParseError("xml line " + std::to_string(cur.line) + ": mismatched </" +
                                 closing + ">, expected </" + node.name + ">");
            }
            cur.skip_ws();
            cur.expect('>');
            return node;
        }
        if (cur.peek() != '<') {
            throw ParseError("xml line " + std::to_string(cur.line) +
                             ": unexpected text content inside <" + node.name + ">");
        }
        node.children.push_back(parse_element(cur));
    }
}

} // namespace

const std::string* Node::attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
        if (k == key) return &v;
    }
    return nullptr;
}

const Node* Node::child(const std::string& name) const {
    for (const auto& c : children) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::vector<const Node*> Node::children_named(const std::string& name) const {
    std::vector<const Node*> out;
    for (const auto& c : children) {
        if (c.name == name) out.push_back(&c);
    }
    return out;
}

Node parse(const std::string& text) {
    Cursor cur{text};
    skip_misc(cur);
    if (cur.eof() || cur.peek() != '<') throw ParseError("xml: no root element");
    Node root = parse_element(cur);
    skip_misc(cur);
    if (!cur.eof()) {
        throw ParseError("xml line " + std::to_string(cur.line) + ": content after root element");
    }
    return root;
}

std::string escape(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace simbridge::xml
