#include "citysplat/io/ply.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

namespace citysplat::io {

static_assert(std::endian::native == std::endian::little, "PLY codec assumes a little-endian host");

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_scalar_type(const std::string& s) {
    static const std::unordered_map<std::string, ScalarType> kTypes = {
        {"char", ScalarType::Int8},     {"int8", ScalarType::Int8},      {"uchar", ScalarType::UInt8},
        {"uint8", ScalarType::UInt8},   {"short", ScalarType::Int16},    {"int16", ScalarType::Int16},
        {"ushort", ScalarType::UInt16}, {"uint16", ScalarType::UInt16},  {"int", ScalarType::Int32},
        {"int32", ScalarType::Int32},   {"uint", ScalarType::UInt32},    {"uint32", ScalarType::UInt32},
        {"float", ScalarType::Float32}, {"float32", ScalarType::Float32}, {"double", ScalarType::Float64},
        {"float64", ScalarType::Float64},
    };
    const auto it = kTypes.find(s);
    if (it == kTypes.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t scalar_size(ScalarType t) {
    switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
    }
    return 0;
}

template <typename T>
T load_unaligned(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_scalar(ScalarType t, const std::uint8_t* p) {
    switch (t) {
    case ScalarType::Int8: return load_unaligned<std::int8_t>(p);
    case ScalarType::UInt8: return load_unaligned<std::uint8_t>(p);
    case ScalarType::Int16: return load_unaligned<std::int16_t>(p);
    case ScalarType::UInt16: return load_unaligned<std::uint16_t>(p);
    case ScalarType::Int32: return load_unaligned<std::int32_t>(p);
    case ScalarType::UInt32: return load_unaligned<std::uint32_t>(p);
    case ScalarType::Float32: return load_unaligned<float>(p);
    case ScalarType::Float64: return load_unaligned<double>(p);
    }
    return 0.0;
}

struct Property {
    std::string name;
    ScalarType type;
    std::size_t offset;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
    std::size_t stride = 0;
    bool has_list = false;
};

struct Header {
    std::vector<Element> elements;
    std::size_t data_offset = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
    static constexpr std::string_view kEnd = "end_header";
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()),
                                std::min<std::size_t>(bytes.size(), 1 << 20));
    const auto end_pos = text.find(kEnd);
    if (text.substr(0, 3) != "ply" || end_pos == std::string_view::npos) {
        throw SchemaError("not a PLY file (missing 'ply' magic or 'end_header')");
    }
    std::size_t data_offset = end_pos + kEnd.size();
    if (data_offset < text.size() && text[data_offset] == '\r') {
        ++data_offset;
    }
    if (data_offset >= text.size() || text[data_offset] != '\n') {
        throw SchemaError("PLY header is not newline terminated");
    }
    ++data_offset;

    Header header;
    header.data_offset = data_offset;
    std::istringstream lines{std::string(text.substr(0, end_pos))};
    std::string line;
    bool format_seen = false;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream tok(line);
        std::string keyword;
        tok >> keyword;
        if (keyword == "format") {
            std::string fmt_name, version;
            tok >> fmt_name >> version;
            if (fmt_name != "binary_little_endian") {
                throw SchemaError(fmt::format("unsupported PLY format '{}'", fmt_name));
            }
            format_seen = true;
        } else if (keyword == "element") {
            Element e;
            tok >> e.name >> e.count;
            if (tok.fail()) {
                throw SchemaError(fmt::format("malformed element line '{}'", line));
            }
            header.elements.push_back(std::move(e));
        } else if (keyword == "property") {
            if (header.elements.empty()) {
                throw SchemaError("PLY property declared before any element");
            }
            Element& e = header.elements.back();
            std::string type_name;
            tok >> type_name;
            if (type_name == "list") {
                e.has_list = true;
                continue;
            }
            std::string name;
            tok >> name;
            const auto type = parse_scalar_type(type_name);
            if (!type) {
                throw SchemaError(fmt::format("unknown PLY property type '{}'", type_name));
            }
            e.properties.push_back({name, *type, e.stride});
            e.stride += scalar_size(*type);
        }
    }
    if (!format_seen) {
        throw SchemaError("PLY header has no format line");
    }
    return header;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

int degree_from_rest_count(std::size_t n) {
    for (int d = 0; d <= kMaxShDegree; ++d) {
        if (n == static_cast<std::size_t>(3 * (sh_coefficient_count(d) - 1))) {
            return d;
        }
    }
    return -1;
}

void append(std::vector<std::uint8_t>& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

void append_f32(std::vector<std::uint8_t>& out, double v) {
    const float f = static_cast<float>(v);
    std::uint8_t buf[4];
    std::memcpy(buf, &f, 4);
    out.insert(out.end(), buf, buf + 4);
}

} // namespace

GaussianCloud decode_ply(std::span<const std::uint8_t> bytes, PlyLoadReport* report) {
    const Header header = parse_header(bytes);

    std::size_t offset = header.data_offset;
    const Element* vertex = nullptr;
    for (const Element& e : header.elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
        if (e.has_list) {
            throw SchemaError(fmt::format("element '{}' before vertex has list properties", e.name));
        }
        offset += e.count * e.stride;
    }
    if (vertex == nullptr) {
        throw SchemaError("PLY has no 'vertex' element");
    }
    if (vertex->has_list) {
        throw SchemaError("vertex element must not contain list properties");
    }

    auto find = [&](const std::string& name) -> const Property* {
        for (const Property& p : vertex->properties) {
            if (p.name == name) {
                return &p;
            }
        }
        return nullptr;
    };
    auto require = [&](const std::string& name) -> const Property& {
        const Property* p = find(name);
        if (p == nullptr) {
            throw SchemaError(fmt::format("PLY is missing required property '{}'", name));
        }
        return *p;
    };

    const Property* pos[3] = {&require("x"), &require("y"), &require("z")};
    const Property* dc[3] = {&require("f_dc_0"), &require("f_dc_1"), &require("f_dc_2")};
    const Property* opacity = &require("opacity");
    const Property* scale[3] = {&require("scale_0"), &require("scale_1"), &require("scale_2")};
    const Property* rot[4] = {&require("rot_0"), &require("rot_1"), &require("rot_2"), &require("rot_3")};

    std::size_t rest_count = 0;
    while (find(fmt::format("f_rest_{}", rest_count)) != nullptr) {
        ++rest_count;
    }
    const int degree = degree_from_rest_count(rest_count);
    if (degree < 0) {
        throw SchemaError(fmt::format("PLY has {} f_rest properties; expected 0, 9, 24 or 45", rest_count));
    }
    std::vector<const Property*> rest(rest_count);
    for (std::size_t i = 0; i < rest_count; ++i) {
        rest[i] = find(fmt::format("f_rest_{}", i));
    }
    const int rest_per_channel = sh_coefficient_count(degree) - 1;

    const std::size_t need = offset + vertex->count * vertex->stride;
    if (bytes.size() < need) {
        throw DataError(fmt::format("PLY body truncated: {} bytes, expected at least {}", bytes.size(), need));
    }

    PlyLoadReport local;
    GaussianCloud cloud;
    cloud.sh_degree = degree;
    cloud.gaussians.resize(vertex->count);
    for (std::size_t row = 0; row < vertex->count; ++row) {
        const std::uint8_t* base = bytes.data() + offset + row * vertex->stride;
        auto get = [&](const Property* p) {
            const double v = read_scalar(p->type, base + p->offset);
            if (!std::isfinite(v)) {
                throw DataError(fmt::format("non-finite value for '{}' at row {}", p->name, row));
            }
            return v;
        };
        Gaussian& g = cloud.gaussians[row];
        g.position = {get(pos[0]), get(pos[1]), get(pos[2])};
        g.opacity = sigmoid(get(opacity));
        for (int a = 0; a < 3; ++a) {
            double s = std::exp(get(scale[a]));
            if (!(s >= kMinScale)) {
                s = kMinScale;
                ++local.clamped_scales;
            }
            g.scale[a] = s;
        }
        Eigen::Quaterniond q(get(rot[0]), get(rot[1]), get(rot[2]), get(rot[3]));
        const double qn = q.coeffs().norm();
        if (qn == 0.0) {
            throw DataError(fmt::format("zero rotation quaternion at row {}", row));
        }
        if (std::abs(qn - 1.0) > 1e-6) {
            q.coeffs() /= qn;
            ++local.renormalized_rotations;
        }
        g.rotation = q;
        g.sh.setZero();
        for (int c = 0; c < 3; ++c) {
            g.sh(0, c) = static_cast<float>(get(dc[c]));
            for (int k = 1; k <= rest_per_channel; ++k) {
                g.sh(k, c) = static_cast<float>(get(rest[c * rest_per_channel + (k - 1)]));
            }
        }
    }
    if (report != nullptr) {
        *report = local;
    }
    return cloud;
}

GaussianCloud load_ply(const std::filesystem::path& path, PlyLoadReport* report) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_ply(bytes, report);
    } catch (const SchemaError& e) {
        throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<std::uint8_t> encode_ply(const GaussianCloud& cloud, PlySaveReport* report) {
    if (cloud.sh_degree < 0 || cloud.sh_degree > kMaxShDegree) {
        throw InvalidParameter(fmt::format("cloud sh_degree {} outside 0..3", cloud.sh_degree));
    }
    const int rest_per_channel = sh_coefficient_count(cloud.sh_degree) - 1;
    const std::size_t rest_total = 3 * static_cast<std::size_t>(rest_per_channel);

    std::vector<std::uint8_t> out;
    append(out, "ply\nformat binary_little_endian 1.0\n");
    append(out, fmt::format("element vertex {}\n", cloud.size()));
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        append(out, fmt::format("property float {}\n", name));
    }
    for (std::size_t i = 0; i < rest_total; ++i) {
        append(out, fmt::format("property float f_rest_{}\n", i));
    }
    for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
        append(out, fmt::format("property float {}\n", name));
    }
    append(out, "end_header\n");

    const std::size_t stride = 4 * (9 + rest_total + 8);
    out.reserve(out.size() + stride * cloud.size());

    PlySaveReport local;
    for (const Gaussian& g : cloud.gaussians) {
        for (int a = 0; a < 3; ++a) {
            append_f32(out, g.position[a]);
        }
        for (int a = 0; a < 3; ++a) {
            append_f32(out, 0.0);
        }
        for (int c = 0; c < 3; ++c) {
            append_f32(out, g.sh(0, c));
        }
        for (int c = 0; c < 3; ++c) {
            for (int k = 1; k <= rest_per_channel; ++k) {
                append_f32(out, g.sh(k, c));
            }
        }
        double o = g.opacity;
        if (o < kOpacityClamp || o > 1.0 - kOpacityClamp) {
            o = std::clamp(o, kOpacityClamp, 1.0 - kOpacityClamp);
            ++local.clamped_opacities;
        }
        append_f32(out, logit(o));
        for (int a = 0; a < 3; ++a) {
            append_f32(out, std::log(g.scale[a]));
        }
        append_f32(out, g.rotation.w());
        append_f32(out, g.rotation.x());
        append_f32(out, g.rotation.y());
        append_f32(out, g.rotation.z());
    }
    if (report != nullptr) {
        *report = local;
    }
    return out;
}

void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path, PlySaveReport* report) {
    write_file_atomic(path, encode_ply(cloud, report));
}

} // namespace citysplat::io
