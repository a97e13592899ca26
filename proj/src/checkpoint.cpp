#include "epismc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "epismc/hash.hpp"

namespace epismc {

namespace {

constexpr char kMagic[8] = {'E', 'P', 'S', 'N', 'A', 'P', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::string& buf, const void* p, std::size_t n) {
    buf.append(static_cast<const char*>(p), n);
}
template <typename T>
void put(std::string& buf, T v) {
    put_bytes(buf, &v, sizeof v);
}
void put_vector(std::string& buf, const Eigen::VectorXd& v) {
    put<std::int64_t>(buf, v.size());
    put_bytes(buf, v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw checkpoint_error("checkpoint truncated");
    }
    void get_bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    template <typename T>
    T get() {
        T v;
        get_bytes(&v, sizeof v);
        return v;
    }
    Eigen::VectorXd get_vector(std::int64_t expect) {
        const auto n = get<std::int64_t>();
        if (n != expect) throw checkpoint_error("checkpoint field length mismatch");
        Eigen::VectorXd v(n);
        get_bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
        return v;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const ParticleSet& ps, std::uint64_t seed,
                     long full_evaluations) {
    std::string buf;
    buf.reserve(64 + static_cast<std::size_t>(ps.u.size() + 6 * ps.size()) * sizeof(double));
    put_bytes(buf, kMagic, sizeof kMagic);
    put(buf, kVersion);
    put(buf, seed);
    put<std::int64_t>(buf, full_evaluations);
    put<std::int32_t>(buf, ps.day);
    put<std::int64_t>(buf, ps.size());
    put<std::int64_t>(buf, ps.dim());
    for (int i = 0; i < ps.size(); ++i)
        put_bytes(buf, Eigen::VectorXd(ps.u.row(i)).data(),
                  static_cast<std::size_t>(ps.dim()) * sizeof(double));
    put_vector(buf, ps.log_w);
    put_vector(buf, ps.log_prior);
    put_vector(buf, ps.hist_ll);
    put_vector(buf, ps.batch_ll);
    put_vector(buf, ps.g);
    for (int p : ps.parent) put<std::int32_t>(buf, p);

    const std::uint64_t h = fnv1a64(buf.data(), buf.size());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw checkpoint_error("cannot open checkpoint for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    if (!out) throw checkpoint_error("checkpoint write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw checkpoint_error("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof kMagic + sizeof kVersion + sizeof(std::uint64_t))
        throw checkpoint_error("checkpoint too small");

    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - sizeof stored, sizeof stored);
    buf.resize(buf.size() - sizeof stored);
    if (fnv1a64(buf.data(), buf.size()) != stored)
        throw checkpoint_error("checkpoint integrity check failed");

    Reader r{buf};
    char magic[8];
    r.get_bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw checkpoint_error("not a particle checkpoint");
    if (r.get<std::uint32_t>() != kVersion) throw checkpoint_error("unsupported checkpoint version");

    CheckpointData out;
    out.seed = r.get<std::uint64_t>();
    out.full_evaluations = static_cast<long>(r.get<std::int64_t>());
    ParticleSet& ps = out.particles;
    ps.day = r.get<std::int32_t>();
    const auto n = r.get<std::int64_t>();
    const auto d = r.get<std::int64_t>();
    if (n < 1 || n > (1LL << 24) || d < 1 || d > (1LL << 12))
        throw checkpoint_error("checkpoint dimensions implausible");
    ps.u.resize(n, d);
    for (std::int64_t i = 0; i < n; ++i) {
        Eigen::VectorXd row(d);
        r.get_bytes(row.data(), static_cast<std::size_t>(d) * sizeof(double));
        ps.u.row(i) = row.transpose();
    }
    ps.log_w = r.get_vector(n);
    ps.log_prior = r.get_vector(n);
    ps.hist_ll = r.get_vector(n);
    ps.batch_ll = r.get_vector(n);
    ps.g = r.get_vector(n);
    ps.parent.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) ps.parent[static_cast<std::size_t>(i)] = r.get<std::int32_t>();
    if (r.pos != buf.size()) throw checkpoint_error("checkpoint carries trailing bytes");
    return out;
}

}  // namespace epismc
