#include "demarklab/nn/serialize.hpp"

#include <cstring>
#include <fstream>

#include "demarklab/errors.hpp"

namespace dml::nn {

namespace {

void put_u64le(std::ostream& os, std::uint64_t x) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw FormatError("checkpoint: truncated header length");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return x;
}

void write_doubles_le(std::ostream& os, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_u64le(os, bits);
    }
}

void read_doubles_le(std::istream& is, std::vector<double>& v) {
    for (double& d : v) {
        const std::uint64_t bits = get_u64le(is);
        std::memcpy(&d, &bits, 8);
    }
}

nlohmann::json read_header(std::istream& is, const std::filesystem::path& path) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic in " + path.string());
    const std::uint64_t hlen = get_u64le(is);
    std::string hdr(hlen, '\0');
    is.read(hdr.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw FormatError("checkpoint: truncated header in " + path.string());
    nlohmann::json j = nlohmann::json::parse(hdr, nullptr, false);
    if (j.is_discarded()) throw FormatError("checkpoint: header is not valid JSON in " + path.string());
    if (j.value("format_version", -1) != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported format version in " + path.string());
    const std::string stored = j.value("config_hash", "");
    if (stored != fnv1a_hex(j.at("config").dump()))
        throw FormatError("checkpoint: config hash mismatch in " + path.string());
    return j;
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const ParamRefs& params) {
    nlohmann::json blobs = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const Param* p : params) {
        blobs.push_back({{"name", p->name}, {"shape", p->value.shape}, {"offset", offset}, {"count", p->value.numel()}});
        offset += p->value.numel();
    }
    nlohmann::json hdr = {
        {"format_version", kCheckpointVersion},
        {"kind", meta.kind},
        {"config", meta.config},
        {"config_hash", fnv1a_hex(meta.config.dump())},
        {"seed", meta.seed},
        {"epochs", meta.epochs},
        {"loss_trace", meta.loss_trace},
        {"blobs", blobs},
    };
    const std::string hstr = hdr.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open for write: " + path.string());
    os.write(kCheckpointMagic, 8);
    put_u64le(os, hstr.size());
    os.write(hstr.data(), static_cast<std::streamsize>(hstr.size()));
    for (const Param* p : params) write_doubles_le(os, p->value.v);
    if (!os) throw IoError("checkpoint: write failed: " + path.string());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NotFoundError("checkpoint: cannot open " + path.string());
    const nlohmann::json j = read_header(is, path);
    CheckpointMeta meta;
    meta.kind = j.value("kind", "");
    meta.config = j.at("config");
    meta.seed = j.value("seed", 0ULL);
    meta.epochs = j.value("epochs", 0);
    meta.loss_trace = j.value("loss_trace", std::vector<double>{});
    return meta;
}

void read_checkpoint_params(const std::filesystem::path& path, const ParamRefs& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NotFoundError("checkpoint: cannot open " + path.string());
    const nlohmann::json j = read_header(is, path);
    const std::streampos blob_base = is.tellg();

    const nlohmann::json& blobs = j.at("blobs");
    for (Param* p : params) {
        bool found = false;
        for (const auto& blob : blobs) {
            if (blob.at("name").get<std::string>() != p->name) continue;
            const auto shape = blob.at("shape").get<std::vector<int>>();
            if (shape != p->value.shape) throw FormatError("checkpoint: shape mismatch for blob " + p->name);
            is.seekg(blob_base + static_cast<std::streamoff>(blob.at("offset").get<std::uint64_t>() * 8));
            read_doubles_le(is, p->value.v);
            if (!is) throw FormatError("checkpoint: truncated blob " + p->name);
            found = true;
            break;
        }
        if (!found) throw FormatError("checkpoint: missing blob " + p->name);
    }
}

} // namespace dml::nn
