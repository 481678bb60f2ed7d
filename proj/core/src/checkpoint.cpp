#include "nlc/checkpoint.hpp"

#include <cstring>

#include "nlc/bitstream.hpp"
#include "nlc/errors.hpp"
#include "nlc/hash.hpp"

namespace nlc {

namespace {

constexpr char magic[4] = {'N', 'L', 'C', 'K'};

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    std::span<const uint8_t> b;
    size_t pos = 0;

    void need(size_t n, const char* what) {
        check_model(pos + n <= b.size(), std::string("checkpoint: truncated ") + what);
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return b[pos++];
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64(const char* what) {
        const uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

void append_config(std::vector<uint8_t>& out, const ModelConfig& cfg) {
    put_u8(out, static_cast<uint8_t>(cfg.variant));
    put_u16(out, static_cast<uint16_t>(cfg.m));
    put_u16(out, static_cast<uint16_t>(cfg.n));
    put_u8(out, static_cast<uint8_t>(cfg.context));
    put_u8(out, static_cast<uint8_t>(cfg.distribution));
    put_f64(out, cfg.scale_floor);
    put_u64(out, cfg.seed);
}

ModelConfig read_config(Reader& r) {
    ModelConfig cfg;
    const uint8_t variant = r.u8("variant");
    check_model(variant <= static_cast<uint8_t>(ModelVariant::combined),
                "checkpoint: unknown variant id");
    cfg.variant = static_cast<ModelVariant>(variant);
    cfg.m = r.u16("M");
    cfg.n = r.u16("N");
    const uint8_t ctx = r.u8("context kind");
    check_model(ctx <= static_cast<uint8_t>(ContextKind::prev_row3),
                "checkpoint: unknown context kind");
    cfg.context = static_cast<ContextKind>(ctx);
    const uint8_t dist = r.u8("distribution kind");
    check_model(dist <= static_cast<uint8_t>(DistributionKind::laplacian),
                "checkpoint: unknown distribution kind");
    cfg.distribution = static_cast<DistributionKind>(dist);
    cfg.scale_floor = r.f64("scale floor");
    cfg.seed = r.u64("seed");
    check_model(cfg.m >= 1 && cfg.n >= 1 && cfg.scale_floor > 0.0,
                "checkpoint: invalid config values");
    return cfg;
}

void append_records(std::vector<uint8_t>& out,
                    const std::vector<std::pair<std::string, Tensor>>& records) {
    put_u32(out, static_cast<uint32_t>(records.size()));
    for (const auto& [name, tensor] : records) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<uint32_t>(tensor.shape().size()));
        for (int64_t d : tensor.shape()) put_u64(out, static_cast<uint64_t>(d));
        for (double v : tensor.values()) put_f64(out, v);
    }
}

std::vector<std::pair<std::string, Tensor>> read_records(Reader& r, const char* what) {
    const uint32_t count = r.u32(what);
    std::vector<std::pair<std::string, Tensor>> records;
    records.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32("record name length");
        r.need(name_len, "record name");
        std::string name(reinterpret_cast<const char*>(r.b.data() + r.pos), name_len);
        r.pos += name_len;
        const uint32_t ndim = r.u32("record rank");
        check_model(ndim <= 8, "checkpoint: implausible tensor rank");
        Shape shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d)
            shape[d] = static_cast<int64_t>(r.u64("record extent"));
        const int64_t count64 = shape_size(shape);
        check_model(count64 >= 0 && count64 < (int64_t{1} << 32),
                    "checkpoint: implausible tensor size");
        std::vector<double> values(static_cast<size_t>(count64));
        for (double& v : values) v = r.f64("record data");
        records.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return records;
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& c) {
    std::vector<uint8_t> body;
    append_config(body, c.config);
    append_records(body, c.params);
    put_u64(body, c.step);
    put_f64(body, c.lambda);
    append_records(body, c.optimizer);

    std::vector<uint8_t> out;
    for (char ch : magic) out.push_back(static_cast<uint8_t>(ch));
    put_u8(out, Checkpoint::current_version);
    out.insert(out.end(), body.begin(), body.end());
    put_u32(out, crc32(std::span<const uint8_t>(body.data(), body.size())));
    return out;
}

Checkpoint parse_checkpoint(std::span<const uint8_t> bytes) {
    check_model(bytes.size() >= 9, "checkpoint: file too small");
    for (size_t i = 0; i < 4; ++i)
        check_model(bytes[i] == static_cast<uint8_t>(magic[i]), "checkpoint: bad magic");
    check_model(bytes[4] == Checkpoint::current_version,
                "checkpoint: unsupported version");
    const std::span<const uint8_t> body = bytes.subspan(5, bytes.size() - 9);
    const uint32_t stored = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24);
    check_model(stored == crc32(body), "checkpoint: digest mismatch");

    Reader r{body};
    Checkpoint c;
    c.config = read_config(r);
    c.params = read_records(r, "parameter record count");
    c.step = r.u64("step");
    c.lambda = r.f64("lambda");
    c.optimizer = read_records(r, "optimizer record count");
    check_model(r.pos == body.size(), "checkpoint: trailing bytes");
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    const auto bytes = serialize_checkpoint(c);
    write_binary_file(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::vector<uint8_t> bytes;
    try {
        bytes = read_binary_file(path);
    } catch (const DataError& e) {
        throw ModelError(e.what());
    }
    return parse_checkpoint(bytes);
}

std::array<uint8_t, 16> checkpoint_model_hash(const Checkpoint& c) {
    std::vector<uint8_t> region;
    append_config(region, c.config);
    append_records(region, c.params);
    Fnv128 h;
    h.update(region);
    return h.digest();
}

std::array<uint8_t, 16> model_hash(Model& model) {
    return checkpoint_model_hash(snapshot_model(model, 0));
}

void apply_checkpoint_params(Model& model, const Checkpoint& c) {
    check_model(model.config() == c.config, "checkpoint: config does not match model");
    auto params = model.parameters();
    check_model(params.size() == c.params.size(),
                "checkpoint: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = c.params[i];
        check_model(params[i]->name == name,
                    "checkpoint: parameter order mismatch at " + name);
        check_model(params[i]->value.shape() == tensor.shape(),
                    "checkpoint: shape mismatch for " + name);
        params[i]->assign(tensor);
    }
}

Checkpoint snapshot_model(Model& model, uint64_t step,
                          std::vector<std::pair<std::string, Tensor>> optimizer) {
    Checkpoint c;
    c.config = model.config();
    c.step = step;
    for (Parameter* p : model.parameters()) c.params.emplace_back(p->name, p->value);
    c.optimizer = std::move(optimizer);
    return c;
}

}  // namespace nlc
