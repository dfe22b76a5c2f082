#include "latticescale/io.hpp"

#include "latticescale/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lsc::io {

namespace {

using ordered_json = nlohmann::ordered_json;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(raw(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
    std::uint64_t u64() { return raw(8); }
    double f64() { return std::bit_cast<double>(raw(8)); }

    void expect_magic(const char* magic) {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
            throw std::runtime_error(path_ + ": bad magic, expected " + magic);
        pos_ += 4;
    }

    void expect_exhausted() const {
        if (pos_ != bytes_.size())
            throw std::runtime_error(path_ + ": trailing bytes after payload");
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw std::runtime_error(path_ + ": truncated container");
    }
    std::uint64_t raw(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

// JSON has no inf/nan literals; carry non-finite doubles as strings.
ordered_json json_double(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

void write_sidecar(const std::string& path, const ordered_json& meta) {
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

void put_params(std::string& out, const std::vector<double>& params) {
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (double p : params) put_f64(out, p);
}

std::vector<double> get_params(Reader& r) {
    std::uint32_t n = r.u32();
    std::vector<double> params(n);
    for (auto& p : params) p = r.f64();
    return params;
}

coeff::Family family_from_byte(std::uint8_t b, const std::string& path) {
    if (b > 4) throw std::runtime_error(path + ": unknown family tag");
    return static_cast<coeff::Family>(b);
}

ordered_json params_json(const std::vector<double>& params) {
    ordered_json a = ordered_json::array();
    for (double p : params) a.push_back(json_double(p));
    return a;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    if (f.bad()) throw std::runtime_error("read failure: " + path);
    return content;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto emit_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            out += cells[i];
        }
        out.push_back('\n');
    };
    emit_row(header);
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width differs from header");
        emit_row(row);
    }
    write_text_file(path, out);
}

void write_grid(const std::string& path, const coeff::CoefficientGrid& grid) {
    std::string out;
    out += "LSCG";
    put_u16(out, container_version);
    put_u32(out, static_cast<std::uint32_t>(grid.R1));
    put_u32(out, static_cast<std::uint32_t>(grid.R2));
    put_f64(out, grid.q1);
    put_f64(out, grid.q2);
    put_u8(out, static_cast<std::uint8_t>(grid.family));
    put_params(out, grid.params);
    for (std::size_t i = 0; i < grid.values.size(); ++i) put_f64(out, grid.values.data()[i]);
    write_text_file(path, out);

    ordered_json meta;
    meta["container"] = "LSCG";
    meta["version"] = container_version;
    meta["family"] = coeff::to_string(grid.family);
    meta["R1"] = grid.R1;
    meta["R2"] = grid.R2;
    meta["q1"] = json_double(grid.q1);
    meta["q2"] = json_double(grid.q2);
    meta["params"] = params_json(grid.params);
    meta["zero_sum_residual"] = json_double(grid.zero_sum_residual);
    write_sidecar(path, meta);
}

coeff::CoefficientGrid read_grid(const std::string& path) {
    Reader r(read_text_file(path), path);
    r.expect_magic("LSCG");
    if (r.u16() != container_version)
        throw std::runtime_error(path + ": unsupported container version");
    coeff::CoefficientGrid g;
    g.R1 = static_cast<int>(r.u32());
    g.R2 = static_cast<int>(r.u32());
    g.q1 = r.f64();
    g.q2 = r.f64();
    g.family = family_from_byte(r.u8(), path);
    g.params = get_params(r);
    g.values = Array2D<double>(static_cast<std::size_t>(2 * g.R1 + 1),
                               static_cast<std::size_t>(2 * g.R2 + 1));
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values.data()[i] = r.f64();
    r.expect_exhausted();
    g.zero_sum_residual = coeff::zero_sum_residual(g);
    return g;
}

void write_slab(const std::string& path, const sim::FieldSlab& slab) {
    std::string out;
    out += "LSSB";
    put_u16(out, container_version);
    put_u32(out, static_cast<std::uint32_t>(slab.T1));
    put_u32(out, static_cast<std::uint32_t>(slab.T2));
    put_u64(out, slab.innov.base_seed);
    put_u64(out, slab.replicate);
    put_u8(out, static_cast<std::uint8_t>(slab.innov.family));
    put_u8(out, static_cast<std::uint8_t>(slab.coeff_meta.family));
    put_u32(out, static_cast<std::uint32_t>(slab.coeff_meta.R1));
    put_u32(out, static_cast<std::uint32_t>(slab.coeff_meta.R2));
    put_f64(out, slab.coeff_meta.q1);
    put_f64(out, slab.coeff_meta.q2);
    put_params(out, slab.coeff_meta.params);
    for (std::size_t i = 0; i < slab.values.size(); ++i) put_f64(out, slab.values.data()[i]);
    write_text_file(path, out);

    ordered_json meta;
    meta["container"] = "LSSB";
    meta["version"] = container_version;
    meta["T1"] = slab.T1;
    meta["T2"] = slab.T2;
    meta["innovation"] = rng::to_string(slab.innov.family);
    meta["base_seed"] = slab.innov.base_seed;
    meta["replicate"] = slab.replicate;
    meta["coeff_family"] = coeff::to_string(slab.coeff_meta.family);
    meta["R1"] = slab.coeff_meta.R1;
    meta["R2"] = slab.coeff_meta.R2;
    meta["q1"] = json_double(slab.coeff_meta.q1);
    meta["q2"] = json_double(slab.coeff_meta.q2);
    meta["params"] = params_json(slab.coeff_meta.params);
    write_sidecar(path, meta);
}

sim::FieldSlab read_slab(const std::string& path) {
    Reader r(read_text_file(path), path);
    r.expect_magic("LSSB");
    if (r.u16() != container_version)
        throw std::runtime_error(path + ": unsupported container version");
    sim::FieldSlab slab;
    slab.T1 = static_cast<int>(r.u32());
    slab.T2 = static_cast<int>(r.u32());
    slab.innov.base_seed = r.u64();
    slab.replicate = r.u64();
    std::uint8_t innov = r.u8();
    if (innov > 2) throw std::runtime_error(path + ": unknown innovation tag");
    slab.innov.family = static_cast<sim::InnovationFamily>(innov);
    slab.coeff_meta.family = family_from_byte(r.u8(), path);
    slab.coeff_meta.R1 = static_cast<int>(r.u32());
    slab.coeff_meta.R2 = static_cast<int>(r.u32());
    slab.coeff_meta.q1 = r.f64();
    slab.coeff_meta.q2 = r.f64();
    slab.coeff_meta.params = get_params(r);
    slab.values = Array2D<double>(static_cast<std::size_t>(slab.T1),
                                  static_cast<std::size_t>(slab.T2));
    for (std::size_t i = 0; i < slab.values.size(); ++i) slab.values.data()[i] = r.f64();
    r.expect_exhausted();
    return slab;
}

} // namespace lsc::io
