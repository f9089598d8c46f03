#include "ssag/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ssag/errors.hpp"

namespace ssag {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

void put_u32(std::ofstream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ofstream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

void put_string(std::ofstream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_doubles(std::ofstream& os, const std::vector<double>& v) {
    put_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::ifstream& is, const std::string& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw format_error(path + ": truncated checkpoint (u32)");
    return v;
}

std::uint64_t get_u64(std::ifstream& is, const std::string& path) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8))
        throw format_error(path + ": truncated checkpoint (u64)");
    return v;
}

std::string get_string(std::ifstream& is, const std::string& path) {
    const std::uint32_t n = get_u32(is, path);
    std::string s(n, '\0');
    if (!is.read(s.data(), n)) throw format_error(path + ": truncated checkpoint (string)");
    return s;
}

std::vector<double> get_doubles(std::ifstream& is, const std::string& path) {
    const std::uint64_t n = get_u64(is, path);
    std::vector<double> v(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
        throw format_error(path + ": truncated checkpoint (doubles)");
    return v;
}

} // namespace

void checkpoint_write(const std::string& path, const CheckpointBlob& blob) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    os.write("SSCK", 4);
    put_u32(os, 1u);
    put_u64(os, fnv1a64(blob.config_text));
    put_string(os, blob.config_text);
    put_u32(os, blob.epochs_completed);
    put_string(os, blob.rng_state);

    put_u32(os, static_cast<std::uint32_t>(blob.tensors.size()));
    for (const auto& [name, sv] : blob.tensors) {
        put_string(os, name);
        put_u32(os, static_cast<std::uint32_t>(sv.first.size()));
        for (int d : sv.first) put_u32(os, static_cast<std::uint32_t>(d));
        put_doubles(os, sv.second);
    }
    put_u32(os, static_cast<std::uint32_t>(blob.buffers.size()));
    for (const auto& [name, vals] : blob.buffers) {
        put_string(os, name);
        put_doubles(os, vals);
    }
    put_u32(os, static_cast<std::uint32_t>(blob.optimizers.size()));
    for (const auto& [name, grp] : blob.optimizers) {
        put_string(os, name);
        put_u64(os, grp.step_count);
        put_u32(os, static_cast<std::uint32_t>(grp.m.size()));
        for (std::size_t i = 0; i < grp.m.size(); ++i) {
            put_doubles(os, grp.m[i]);
            put_doubles(os, grp.v[i]);
        }
    }
    if (!os) throw format_error(path + ": write failed");
}

CheckpointBlob checkpoint_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SSCK", 4) != 0)
        throw format_error(path + ": bad magic at offset 0, expected 'SSCK'");
    const std::uint32_t version = get_u32(is, path);
    if (version != 1u) throw format_error(path + ": unsupported checkpoint version " + std::to_string(version));
    CheckpointBlob blob;
    const std::uint64_t stored_hash = get_u64(is, path);
    blob.config_text = get_string(is, path);
    if (fnv1a64(blob.config_text) != stored_hash)
        throw incompat_error(path + ": config hash does not match stored configuration");
    blob.epochs_completed = get_u32(is, path);
    blob.rng_state = get_string(is, path);

    const std::uint32_t nt = get_u32(is, path);
    for (std::uint32_t i = 0; i < nt; ++i) {
        const std::string name = get_string(is, path);
        const std::uint32_t rank = get_u32(is, path);
        std::vector<int> shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<int>(get_u32(is, path)));
        auto vals = get_doubles(is, path);
        blob.tensors.emplace_back(name, std::make_pair(std::move(shape), std::move(vals)));
    }
    const std::uint32_t nb = get_u32(is, path);
    for (std::uint32_t i = 0; i < nb; ++i) {
        const std::string name = get_string(is, path);
        blob.buffers.emplace_back(name, get_doubles(is, path));
    }
    const std::uint32_t no = get_u32(is, path);
    for (std::uint32_t i = 0; i < no; ++i) {
        const std::string name = get_string(is, path);
        CheckpointBlob::OptGroup grp;
        grp.step_count = get_u64(is, path);
        const std::uint32_t np = get_u32(is, path);
        for (std::uint32_t p = 0; p < np; ++p) {
            grp.m.push_back(get_doubles(is, path));
            grp.v.push_back(get_doubles(is, path));
        }
        blob.optimizers.emplace(name, std::move(grp));
    }
    return blob;
}

} // namespace ssag
