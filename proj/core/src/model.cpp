#include "fastdvd/model.hpp"

#include "fastdvd/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace fastdvd {

namespace {

constexpr char kMagic[8] = {'F', 'D', 'V', 'D', 'N', 'E', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct Reader {
    const unsigned char* p;
    std::size_t len;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > len) {
            throw FormatError(FormatError::Kind::truncated,
                              "weights file truncated at byte " + std::to_string(off));
        }
    }
    std::uint8_t u8() {
        need(1);
        return p[off++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[off]) |
                          static_cast<std::uint16_t>(p[off + 1]) << 8;
        off += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
        off += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p + off), n);
        off += n;
        return s;
    }
};

struct Entry {
    std::string name;
    std::span<float> values;
    std::vector<std::uint32_t> dims;
};

std::vector<Entry> sorted_entries(ModelWeights& m) {
    std::vector<Entry> entries;
    visit_all(m, [&](const std::string& name, std::span<float> values,
                     std::vector<std::uint32_t> dims) {
        entries.push_back(Entry{name, values, std::move(dims)});
    });
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.name < b.name; });
    return entries;
}

} // namespace

void save_weights(const ModelWeights& m, const std::string& path) {
    // visit_all needs mutable spans; serialization only reads them.
    ModelWeights& mut = const_cast<ModelWeights&>(m);
    auto entries = sorted_entries(mut);

    std::string buf;
    buf.append(kMagic, sizeof kMagic);
    put_u32(buf, kVersion);
    put_u8(buf, static_cast<std::uint8_t>(m.variant));
    put_u32(buf, static_cast<std::uint32_t>(m.c0));
    put_u32(buf, static_cast<std::uint32_t>(m.c1));
    put_u32(buf, static_cast<std::uint32_t>(m.c2));
    put_u32(buf, static_cast<std::uint32_t>(entries.size()));
    for (const Entry& e : entries) {
        put_u16(buf, static_cast<std::uint16_t>(e.name.size()));
        buf.append(e.name);
        put_u8(buf, static_cast<std::uint8_t>(e.dims.size()));
        for (std::uint32_t d : e.dims) put_u32(buf, d);
        for (float v : e.values) put_f32(buf, v);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) {
        throw IoError("short write to '" + path + "'");
    }
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) {
        throw IoError("read failure on '" + path + "'");
    }

    Reader r{reinterpret_cast<const unsigned char*>(data.data()), data.size()};
    const std::string magic = r.bytes(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
        throw FormatError(FormatError::Kind::bad_magic, "'" + path + "' is not a weights file");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError(FormatError::Kind::bad_version,
                          "unsupported weights version " + std::to_string(version));
    }
    const std::uint8_t variant_tag = r.u8();
    if (variant_tag > 1) {
        throw FormatError(FormatError::Kind::bad_field,
                          "unknown variant tag " + std::to_string(variant_tag));
    }
    const auto c0 = static_cast<int>(r.u32());
    const auto c1 = static_cast<int>(r.u32());
    const auto c2 = static_cast<int>(r.u32());
    if (c0 < 1 || c1 < 1 || c2 < 1 || c0 > 4096 || c1 > 4096 || c2 > 4096) {
        throw FormatError(FormatError::Kind::bad_field, "implausible channel config " +
                                                            std::to_string(c0) + "," +
                                                            std::to_string(c1) + "," +
                                                            std::to_string(c2));
    }
    const std::uint32_t count = r.u32();

    ModelWeights m = make_model<float>(static_cast<Variant>(variant_tag), c0, c1, c2);
    auto entries = sorted_entries(m);
    if (count != entries.size()) {
        throw FormatError(FormatError::Kind::bad_field,
                          "expected " + std::to_string(entries.size()) + " tensors, file has " +
                              std::to_string(count));
    }

    std::string prev_name;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        const std::string name = r.bytes(name_len);
        if (i > 0 && !(prev_name < name)) {
            throw FormatError(FormatError::Kind::bad_field,
                              "tensor names not in sorted order at '" + name + "'");
        }
        prev_name = name;

        auto it = std::lower_bound(entries.begin(), entries.end(), name,
                                   [](const Entry& e, const std::string& n) { return e.name < n; });
        if (it == entries.end() || it->name != name) {
            throw FormatError(FormatError::Kind::unknown_tensor,
                              "unknown tensor '" + name + "'");
        }

        const std::uint8_t ndim = r.u8();
        if (ndim != it->dims.size()) {
            throw FormatError(FormatError::Kind::bad_field,
                              "tensor '" + name + "': expected " +
                                  std::to_string(it->dims.size()) + " dims, file has " +
                                  std::to_string(ndim));
        }
        std::size_t total = 1;
        for (int d = 0; d < ndim; ++d) {
            const std::uint32_t dim = r.u32();
            if (dim != it->dims[d]) {
                throw FormatError(FormatError::Kind::bad_field,
                                  "tensor '" + name + "': dim " + std::to_string(d) + " is " +
                                      std::to_string(dim) + ", expected " +
                                      std::to_string(it->dims[d]));
            }
            total *= dim;
        }
        for (std::size_t v = 0; v < total; ++v) it->values[v] = r.f32();
    }
    if (r.off != data.size()) {
        throw FormatError(FormatError::Kind::bad_field,
                          std::to_string(data.size() - r.off) + " trailing bytes after tensors");
    }
    return m;
}

} // namespace fastdvd
