#include "swob/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace swob {

namespace {

constexpr char kMagic[8] = {'S', 'W', 'O', 'B', 'F', 'L', 'D', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void get(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("fnv1a64_file: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a64(buf, std::size_t(is.gcount()), h);
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void save_field(const std::string& path, const SolutionField& field) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_field: cannot open " + path);
    os.write(kMagic, sizeof(kMagic));
    put(os, field.grid.x_min);
    put(os, field.grid.x_max);
    put(os, std::uint64_t(field.grid.n_x));
    put(os, std::uint64_t(field.grid.n_tau));
    put(os, field.grid.T);
    put(os, std::int32_t(field.grid.scheme));
    put(os, std::int32_t(field.method));
    put(os, field.contact_tol);
    put(os, std::uint64_t(field.v.size()));
    const std::uint64_t checksum =
        fnv1a64(field.v.data(), field.v.size() * sizeof(double));
    put(os, checksum);
    os.write(reinterpret_cast<const char*>(field.v.data()),
             std::streamsize(field.v.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(field.contact_lower.data()),
             std::streamsize(field.contact_lower.size()));
    os.write(reinterpret_cast<const char*>(field.contact_upper.data()),
             std::streamsize(field.contact_upper.size()));
    if (!os) throw std::runtime_error("save_field: write failed for " + path);
}

SolutionField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_field: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_field: bad magic in " + path);

    SolutionField f;
    std::uint64_t nx = 0, nt = 0, n = 0, checksum = 0;
    std::int32_t scheme = 0, method = 0;
    get(is, f.grid.x_min);
    get(is, f.grid.x_max);
    get(is, nx);
    get(is, nt);
    get(is, f.grid.T);
    get(is, scheme);
    get(is, method);
    get(is, f.contact_tol);
    get(is, n);
    get(is, checksum);
    f.grid.n_x = std::size_t(nx);
    f.grid.n_tau = std::size_t(nt);
    f.grid.scheme = TimeScheme(scheme);
    f.method = SolveMethod(method);
    if (n != std::uint64_t(f.grid.nodes_x()) * f.grid.nodes_tau())
        throw std::runtime_error("load_field: size/grid mismatch in " + path);
    f.v.resize(n);
    f.contact_lower.resize(n);
    f.contact_upper.resize(n);
    is.read(reinterpret_cast<char*>(f.v.data()), std::streamsize(n * sizeof(double)));
    is.read(reinterpret_cast<char*>(f.contact_lower.data()), std::streamsize(n));
    is.read(reinterpret_cast<char*>(f.contact_upper.data()), std::streamsize(n));
    if (!is) throw std::runtime_error("load_field: truncated file " + path);
    if (fnv1a64(f.v.data(), f.v.size() * sizeof(double)) != checksum)
        throw std::runtime_error("load_field: payload checksum mismatch in " + path);
    return f;
}

bool cache_matches(const std::string& path, const GridSpec& grid, SolveMethod method) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) return false;
    probe.close();
    try {
        const SolutionField f = load_field(path);
        return f.method == method && f.grid.x_min == grid.x_min && f.grid.x_max == grid.x_max &&
               f.grid.n_x == grid.n_x && f.grid.n_tau == grid.n_tau && f.grid.T == grid.T &&
               f.grid.scheme == grid.scheme;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace swob
