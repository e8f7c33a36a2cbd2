#include "pqm/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "pqm/error.hpp"
#include "pqm/hash.hpp"
#include "pqm/io.hpp"

namespace pqm {

namespace {

constexpr char kModelMagic[5] = "PQM1";
constexpr char kAdapterMagic[5] = "PQMA";
constexpr uint32_t kVersion = 1;

uint8_t kind_code(LayerKind k) {
    switch (k) {
        case LayerKind::embedding: return 0;
        case LayerKind::conv1d: return 1;
        case LayerKind::linear: return 2;
    }
    throw Error::validation("bad layer kind");
}

LayerKind kind_from_code(uint8_t c) {
    switch (c) {
        case 0: return LayerKind::embedding;
        case 1: return LayerKind::conv1d;
        case 2: return LayerKind::linear;
    }
    throw Error::corrupt("bad layer kind code");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open: " + path);
    return in;
}

}  // namespace

std::string sha256_hex(const void* data, size_t len) {
    Sha256 h;
    h.update(data, len);
    return h.hex_digest();
}

std::string sha256_file(const std::string& path) {
    auto in = open_in(path);
    Sha256 h;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h.update(buf, static_cast<size_t>(in.gcount()));
    return h.hex_digest();
}

void save_checkpoint(const std::string& path, const ToyModel& model) {
    auto out = open_out(path);
    out.write(kModelMagic, 4);
    io::write_u32(out, kVersion);
    io::write_u32(out, static_cast<uint32_t>(model.vocab));
    io::write_u32(out, static_cast<uint32_t>(model.classes));
    io::write_u32(out, static_cast<uint32_t>(model.d_model));
    io::write_u64(out, model.seed);
    io::write_u32(out, static_cast<uint32_t>(model.layers.size()));
    for (const auto& l : model.layers) {
        io::write_string(out, l.id);
        io::write_u8(out, kind_code(l.kind));
        io::write_u8(out, l.quantised ? 1 : 0);
        io::write_u8(out, l.lora_attached ? 1 : 0);
        io::write_u32(out, static_cast<uint32_t>(l.out_dim()));
        io::write_u32(out, static_cast<uint32_t>(l.in_dim()));
        if (l.quantised) {
            io::write_u8(out, static_cast<uint8_t>(l.qweight.k));
            io::write_u32(out, static_cast<uint32_t>(l.qweight.block_size));
            io::write_f32_array(out, l.qweight.scales.data(), l.qweight.scales.size());
            io::write_bytes(out, l.qweight.codes.data(), l.qweight.codes.size());
        } else {
            io::write_f32_array(out, l.weight.data.data(), l.weight.size());
        }
        io::write_u32(out, static_cast<uint32_t>(l.bias.size()));
        io::write_f32_array(out, l.bias.data(), l.bias.size());
    }
    if (!out) throw Error::io("write failed: " + path);
}

ToyModel load_checkpoint(const std::string& path) {
    auto in = open_in(path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != kModelMagic)
        throw Error::corrupt("bad checkpoint magic in " + path);
    if (io::read_u32(in) != kVersion) throw Error::corrupt("unsupported version");
    ToyModel m;
    m.vocab = static_cast<int>(io::read_u32(in));
    m.classes = static_cast<int>(io::read_u32(in));
    m.d_model = static_cast<int>(io::read_u32(in));
    m.seed = io::read_u64(in);
    uint32_t n_layers = io::read_u32(in);
    if (n_layers > 64) throw Error::corrupt("implausible layer count");
    for (uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        l.id = io::read_string(in);
        l.kind = kind_from_code(io::read_u8(in));
        l.quantised = io::read_u8(in) != 0;
        l.lora_attached = io::read_u8(in) != 0;
        int rows = static_cast<int>(io::read_u32(in));
        int cols = static_cast<int>(io::read_u32(in));
        if (rows <= 0 || cols <= 0) throw Error::corrupt("bad layer dims");
        if (l.quantised) {
            QuantisedMatrix q;
            q.rows = rows;
            q.cols = cols;
            q.k = io::read_u8(in);
            if (q.k < 2 || q.k > 8) throw Error::corrupt("bad bit width");
            q.block_size = static_cast<int>(io::read_u32(in));
            if (q.block_size < 1) throw Error::corrupt("bad block size");
            size_t total = q.num_elements();
            size_t nb = (total + q.block_size - 1) / q.block_size;
            q.scales.resize(nb);
            io::read_f32_array(in, q.scales.data(), nb);
            q.codes = io::read_bytes(in, (total * q.k + 7) / 8);
            l.qweight = std::move(q);
        } else {
            l.weight = Matrix(rows, cols);
            io::read_f32_array(in, l.weight.data.data(), l.weight.size());
        }
        uint32_t bias_len = io::read_u32(in);
        if (bias_len > (1u << 24)) throw Error::corrupt("implausible bias length");
        l.bias.resize(bias_len);
        io::read_f32_array(in, l.bias.data(), bias_len);
        m.layers.push_back(std::move(l));
    }
    return m;
}

uint64_t model_file_bytes(const ToyModel& model) {
    uint64_t n = 4 + 4 + 4 + 4 + 4 + 8 + 4;  // magic, version, meta, layer count
    for (const auto& l : model.layers) {
        n += 4 + l.id.size();
        n += 3;      // kind, quantised, lora flags
        n += 4 + 4;  // rows, cols
        if (l.quantised) {
            n += 1 + 4;  // k, block_size
            n += 4 * l.qweight.scales.size();
            n += l.qweight.codes.size();
        } else {
            n += 4 * l.weight.size();
        }
        n += 4 + 4 * l.bias.size();
    }
    return n;
}

void save_adapters(const std::string& path, const AdapterSet& set) {
    auto out = open_out(path);
    out.write(kAdapterMagic, 4);
    io::write_u32(out, kVersion);
    io::write_string(out, set.speaker_id);
    io::write_u32(out, static_cast<uint32_t>(set.adapters.size()));
    for (const auto& [id, ad] : set.adapters) {
        io::write_string(out, id);
        io::write_u32(out, static_cast<uint32_t>(ad.b.rows));
        io::write_u32(out, static_cast<uint32_t>(ad.a.cols));
        io::write_u32(out, static_cast<uint32_t>(ad.rank));
        io::write_f32(out, ad.alpha);
        io::write_f32_array(out, ad.a.data.data(), ad.a.size());
        io::write_f32_array(out, ad.b.data.data(), ad.b.size());
    }
    if (!out) throw Error::io("write failed: " + path);
}

AdapterSet load_adapters(const std::string& path) {
    auto in = open_in(path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != kAdapterMagic)
        throw Error::corrupt("bad adapter magic in " + path);
    if (io::read_u32(in) != kVersion) throw Error::corrupt("unsupported version");
    AdapterSet set;
    set.speaker_id = io::read_string(in);
    uint32_t n = io::read_u32(in);
    if (n > 1024) throw Error::corrupt("implausible adapter count");
    for (uint32_t i = 0; i < n; ++i) {
        std::string id = io::read_string(in);
        int d = static_cast<int>(io::read_u32(in));
        int k_dim = static_cast<int>(io::read_u32(in));
        int r = static_cast<int>(io::read_u32(in));
        if (d <= 0 || k_dim <= 0 || r <= 0) throw Error::corrupt("bad adapter dims");
        LoraAdapter ad;
        ad.rank = r;
        ad.alpha = io::read_f32(in);
        ad.a = Matrix(r, k_dim);
        io::read_f32_array(in, ad.a.data.data(), ad.a.size());
        ad.b = Matrix(d, r);
        io::read_f32_array(in, ad.b.data.data(), ad.b.size());
        set.adapters.emplace(std::move(id), std::move(ad));
    }
    return set;
}

void save_datasets(const std::string& path, const std::vector<NamedDataset>& sets) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot open for writing: " + path);
    for (const auto& nd : sets) {
        // records go out in utterance order so indices survive a round trip
        std::vector<const char*> split(nd.data.utterances.size(), nullptr);
        for (int i : nd.data.train) split[i] = "train";
        for (int i : nd.data.dev) split[i] = "dev";
        for (int i : nd.data.test) split[i] = "test";
        for (size_t i = 0; i < nd.data.utterances.size(); ++i) {
            if (!split[i])
                throw Error::validation("save_datasets: utterance missing a split");
            const Utterance& u = nd.data.utterances[i];
            nlohmann::json rec;
            rec["speaker_id"] = nd.speaker_id;
            rec["split"] = split[i];
            rec["tokens"] = u.tokens;
            rec["label"] = u.label;
            out << rec.dump() << "\n";
        }
    }
    if (!out) throw Error::io("write failed: " + path);
}

std::vector<NamedDataset> load_datasets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open: " + path);
    std::vector<NamedDataset> sets;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string spk, split;
        Utterance u;
        try {
            nlohmann::json rec = nlohmann::json::parse(line);
            spk = rec.at("speaker_id").get<std::string>();
            split = rec.at("split").get<std::string>();
            u.tokens = rec.at("tokens").get<std::vector<int>>();
            u.label = rec.at("label").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw Error::corrupt(path + ":" + std::to_string(line_no) + ": " + e.what());
        }

        NamedDataset* nd = nullptr;
        for (auto& s : sets)
            if (s.speaker_id == spk) nd = &s;
        if (!nd) {
            sets.push_back({spk, {}});
            nd = &sets.back();
        }
        int idx = static_cast<int>(nd->data.utterances.size());
        nd->data.utterances.push_back(std::move(u));
        if (split == "train") nd->data.train.push_back(idx);
        else if (split == "dev") nd->data.dev.push_back(idx);
        else if (split == "test") nd->data.test.push_back(idx);
        else throw Error::corrupt(path + ": unknown split " + split);
    }
    return sets;
}

}  // namespace pqm
