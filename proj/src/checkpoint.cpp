#include "pcreg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace pcreg {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'R', 'E', 'G', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<unsigned char>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

struct Reader {
    const std::vector<unsigned char>& buf;
    std::size_t at = 0;
    const std::filesystem::path& path;

    void need(std::size_t n) const {
        if (at + n > buf.size())
            throw std::runtime_error("checkpoint " + path.string() + ": truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[at + i]) << (8 * i);
        at += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[at + i]) << (8 * i);
        at += 8;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const AdamState& opt, std::int64_t step, std::uint64_t config_hash) {
    if (opt.m.size() != params.size() || opt.v.size() != params.size())
        throw std::invalid_argument("save_checkpoint: optimizer state does not match parameters");

    std::vector<unsigned char> out;
    out.reserve(24 + 12 * params.size() + 16);
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, kVersion);
    put_u64(out, config_hash);
    put_u64(out, static_cast<std::uint64_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) put_f32(out, params[i]);
    for (double m : opt.m) put_f32(out, m);
    for (double v : opt.v) put_f32(out, v);
    put_u64(out, static_cast<std::uint64_t>(opt.t));
    put_u64(out, static_cast<std::uint64_t>(step));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());

    Reader r{buf, 0, path};
    r.need(8);
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        throw std::runtime_error("checkpoint " + path.string() + ": bad magic");
    r.at = 8;
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " +
                                 std::to_string(version));
    const std::uint64_t hash = r.u64();
    if (expected_hash != 0 && hash != expected_hash)
        throw std::runtime_error("checkpoint " + path.string() +
                                 ": model config hash mismatch (wrong architecture?)");
    const std::uint64_t n = r.u64();

    Checkpoint ck;
    ck.config_hash = hash;
    std::vector<double> params(n);
    for (std::uint64_t i = 0; i < n; ++i) params[i] = r.f32();
    ck.params = ModelParameters(std::move(params));
    ck.opt = AdamState(n);
    for (std::uint64_t i = 0; i < n; ++i) ck.opt.m[i] = r.f32();
    for (std::uint64_t i = 0; i < n; ++i) ck.opt.v[i] = r.f32();
    ck.opt.t = static_cast<std::int64_t>(r.u64());
    ck.step = static_cast<std::int64_t>(r.u64());
    if (r.at != buf.size())
        throw std::runtime_error("checkpoint " + path.string() + ": trailing bytes");
    return ck;
}

}  // namespace pcreg
