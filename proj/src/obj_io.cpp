#include "simbridge/obj_io.hpp"

#include "simbridge/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace simbridge {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

double parse_double(std::string_view tok, int line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("obj line " + std::to_string(line_no) + ": bad number '" +
                         std::string(tok) + "'");
    }
    return value;
}

std::uint32_t parse_index(std::string_view tok, std::size_t vertex_count, int line_no) {
    // Faces may carry /vt/vn suffixes; only the vertex index is used.
    if (auto slash = tok.find('/'); slash != std::string_view::npos) tok = tok.substr(0, slash);
    long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("obj line " + std::to_string(line_no) + ": bad index '" +
                         std::string(tok) + "'");
    }
    if (value < 0) value = static_cast<long>(vertex_count) + 1 + value; // OBJ negative indexing
    if (value < 1 || static_cast<std::size_t>(value) > vertex_count) {
        throw ParseError("obj line " + std::to_string(line_no) + ": vertex index " +
                         std::string(tok) + " out of range (have " +
                         std::to_string(vertex_count) + " vertices)");
    }
    return static_cast<std::uint32_t>(value - 1);
}

} // namespace

TriMesh parse_obj(const std::string& text) {
    TriMesh mesh;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks[0] == "v") {
            if (toks.size() < 4) {
                throw ParseError("obj line " + std::to_string(line_no) +
                                 ": vertex needs 3 coordinates");
            }
            mesh.vertices.emplace_back(parse_double(toks[1], line_no),
                                       parse_double(toks[2], line_no),
                                       parse_double(toks[3], line_no));
        } else if (toks[0] == "f") {
            if (toks.size() < 4) {
                throw ParseError("obj line " + std::to_string(line_no) +
                                 ": face needs at least 3 indices");
            }
            std::vector<std::uint32_t> idx;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                idx.push_back(parse_index(toks[i], mesh.vertices.size(), line_no));
            }
            // Fan triangulation for quads and larger polygons.
            for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
                mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
            }
        } else if (toks[0] == "vn" || toks[0] == "vt" || toks[0] == "s" || toks[0] == "g" ||
                   toks[0] == "o" || toks[0] == "usemtl" || toks[0] == "mtllib") {
            // Ignored: no materials or normals in this subset.
        } else {
            throw ParseError("obj line " + std::to_string(line_no) + ": unknown record '" +
                             std::string(toks[0]) + "'");
        }
    }
    return mesh;
}

TriMesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open obj file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_obj(buf.str());
}

std::string write_obj(const TriMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 48 + mesh.triangles.size() * 24);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out += buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof(buf), "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += buf;
    }
    return out;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write obj file: " + path.string());
    out << write_obj(mesh);
    if (!out) throw IoError("short write: " + path.string());
}

} // namespace simbridge
