#include "taprbm/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "taprbm/errors.hpp"

namespace taprbm {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

void check_sites(const std::vector<UnitParams>& sites) {
    for (const auto& p : sites) validate(p);
}

void check_weights(const Matrix& w, Eigen::Index rows, Eigen::Index cols) {
    if (w.rows() != rows || w.cols() != cols) {
        throw InputError("model: coupling matrix shape mismatch");
    }
    if (!w.allFinite()) throw InputError("model: non-finite coupling");
}

// ---- byte-level helpers (explicit little-endian) ----

struct Writer {
    std::string buf;

    void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n) const {
        if (left < n) throw FormatError("model file truncated");
    }
    std::uint8_t u8() {
        need(1);
        --left;
        return *p++;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(*p++) << (8 * i);
        left -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
        left -= 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

void write_unit(Writer& w, const UnitParams& p) {
    w.u8(static_cast<std::uint8_t>(family_of(p)));
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, BinaryParams>) {
                w.f64(q.u);
            } else if constexpr (std::is_same_v<T, TruncGaussParams>) {
                w.f64(q.u);
                w.f64(q.v);
                w.f64(q.alpha);
                w.f64(q.omega);
            } else {
                w.f64(q.rho);
                w.f64(q.u);
                w.f64(q.v);
                w.f64(q.alpha);
                w.f64(q.omega);
            }
        },
        p);
}

UnitParams read_unit(Reader& r) {
    const std::uint8_t tag = r.u8();
    switch (tag) {
        case 0:
            return BinaryParams{r.f64()};
        case 1: {
            TruncGaussParams p;
            p.u = r.f64();
            p.v = r.f64();
            p.alpha = r.f64();
            p.omega = r.f64();
            return p;
        }
        case 2: {
            TgbParams p;
            p.rho = r.f64();
            p.u = r.f64();
            p.v = r.f64();
            p.alpha = r.f64();
            p.omega = r.f64();
            return p;
        }
        default:
            throw FormatError("model file: unknown unit family tag " + std::to_string(tag));
    }
}

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t seed) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xff] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void validate(const GrbmModel& m) {
    if (m.vis.empty() || m.hid.empty()) throw InputError("model: empty layer");
    check_sites(m.vis);
    check_sites(m.hid);
    check_weights(m.w, m.n_visible(), m.n_hidden());
}

void validate(const DbmModel& m) {
    if (m.layers.size() < 2 || m.weights.size() != m.layers.size() - 1) {
        throw InputError("model: layer/weight count mismatch");
    }
    for (const auto& layer : m.layers) {
        if (layer.empty()) throw InputError("model: empty layer");
        check_sites(layer);
    }
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        check_weights(m.weights[l], static_cast<Eigen::Index>(m.layers[l].size()),
                      static_cast<Eigen::Index>(m.layers[l + 1].size()));
    }
}

DbmModel to_dbm(const GrbmModel& m) {
    DbmModel d;
    d.layers = {m.vis, m.hid};
    d.weights = {m.w};
    return d;
}

GrbmModel to_grbm(const DbmModel& m) {
    if (m.n_hidden_layers() != 1) {
        throw InputError("to_grbm: model has more than one hidden layer");
    }
    GrbmModel g;
    g.vis = m.layers[0];
    g.hid = m.layers[1];
    g.w = m.weights[0];
    return g;
}

GrbmModel init_model(Eigen::Index n_hidden, UnitFamily vis_family, UnitFamily hid_family,
                     const Matrix& data_sample, double sigma, std::uint64_t seed) {
    if (data_sample.rows() == 0 || data_sample.cols() == 0) {
        throw InputError("init_model: empty data sample");
    }
    if (!(sigma > 0.0)) throw InputError("init_model: sigma must be positive");
    if (n_hidden < 1) throw InputError("init_model: need at least one hidden unit");

    const Eigen::Index n_vis = data_sample.cols();
    GrbmModel m;
    m.w.resize(n_vis, n_hidden);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index i = 0; i < n_vis; ++i) {
        for (Eigen::Index j = 0; j < n_hidden; ++j) m.w(i, j) = gauss(gen);
    }

    m.vis.reserve(n_vis);
    const double clamp_lo = 1e-3, clamp_hi = 1.0 - 1e-3;
    for (Eigen::Index i = 0; i < n_vis; ++i) {
        const auto col = data_sample.col(i);
        const double mean = col.mean();
        switch (vis_family) {
            case UnitFamily::Binary: {
                const double mc = std::clamp(mean, clamp_lo, clamp_hi);
                m.vis.push_back(BinaryParams{std::log(mc / (1.0 - mc))});
                break;
            }
            case UnitFamily::TruncGauss: {
                const double mc = std::clamp(mean, clamp_lo, clamp_hi);
                const double var =
                    std::max((col.array() - mean).square().mean(), 1e-4);
                m.vis.push_back(TruncGaussParams{mc / var, 1.0 / var, 0.0, 1.0});
                break;
            }
            case UnitFamily::TruncGaussBernoulli: {
                const double frac_nz =
                    std::clamp((col.array() != 0.0).cast<double>().mean(), clamp_lo, clamp_hi);
                double nz_mean = 0.0, nz_sq = 0.0;
                Eigen::Index n_nz = 0;
                for (Eigen::Index r = 0; r < col.size(); ++r) {
                    if (col(r) != 0.0) {
                        nz_mean += col(r);
                        nz_sq += col(r) * col(r);
                        ++n_nz;
                    }
                }
                double mu = n_nz > 0 ? nz_mean / n_nz : 0.5;
                mu = std::clamp(mu, clamp_lo, clamp_hi);
                double var = n_nz > 0 ? nz_sq / n_nz - mu * mu : 0.25;
                var = std::max(var, 1e-4);
                m.vis.push_back(TgbParams{frac_nz, mu / var, 1.0 / var, 0.0, 1.0});
                break;
            }
        }
    }

    m.hid.reserve(n_hidden);
    for (Eigen::Index j = 0; j < n_hidden; ++j) {
        switch (hid_family) {
            case UnitFamily::Binary:
                m.hid.push_back(BinaryParams{0.0});
                break;
            case UnitFamily::TruncGauss:
                m.hid.push_back(TruncGaussParams{0.0, 1.0, 0.0, 1.0});
                break;
            case UnitFamily::TruncGaussBernoulli:
                m.hid.push_back(TgbParams{0.5, 0.0, 1.0, 0.0, 1.0});
                break;
        }
    }
    validate(m);
    return m;
}

void save_model(const DbmModel& m, const std::string& path, const ModelMeta& meta) {
    validate(m);
    Writer w;
    w.buf.append(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(m.layers.size()));
    for (const auto& layer : m.layers) w.u64(layer.size());
    for (const auto& layer : m.layers) {
        for (const auto& p : layer) write_unit(w, p);
    }
    for (const auto& mat : m.weights) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) w.f64(mat(i, j));
        }
    }
    w.u32(meta.epoch);
    w.u64(meta.seed);
    w.u64(meta.config_hash);
    const std::uint32_t crc = crc32(w.buf.data(), w.buf.size());
    w.u32(crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw IoError("short write: " + path);
}

void save_model(const GrbmModel& m, const std::string& path, const ModelMeta& meta) {
    save_model(to_dbm(m), path, meta);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 16) throw FormatError("model file truncated");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad model file magic");

    // checksum covers everything before the trailing 4 bytes
    Reader tail{reinterpret_cast<const std::uint8_t*>(buf.data()) + buf.size() - 4, 4};
    const std::uint32_t want_crc = tail.u32();
    const std::uint32_t have_crc = crc32(buf.data(), buf.size() - 4);
    if (want_crc != have_crc) throw FormatError("model file checksum mismatch");

    Reader r{reinterpret_cast<const std::uint8_t*>(buf.data()) + 4, buf.size() - 8};
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError("unsupported model file version " + std::to_string(version));
    }
    const std::uint32_t n_layers = r.u32();
    if (n_layers < 2 || n_layers > 64) throw FormatError("model file: bad layer count");

    std::vector<std::uint64_t> sizes(n_layers);
    for (auto& s : sizes) {
        s = r.u64();
        if (s == 0 || s > (1u << 24)) throw FormatError("model file: bad layer size");
    }

    LoadedModel out;
    out.model.layers.resize(n_layers);
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        out.model.layers[l].reserve(sizes[l]);
        for (std::uint64_t i = 0; i < sizes[l]; ++i) out.model.layers[l].push_back(read_unit(r));
    }
    out.model.weights.resize(n_layers - 1);
    for (std::uint32_t l = 0; l + 1 < n_layers; ++l) {
        Matrix& mat = out.model.weights[l];
        mat.resize(static_cast<Eigen::Index>(sizes[l]), static_cast<Eigen::Index>(sizes[l + 1]));
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(i, j) = r.f64();
        }
    }
    out.meta.epoch = r.u32();
    out.meta.seed = r.u64();
    out.meta.config_hash = r.u64();
    validate(out.model);
    return out;
}

}  // namespace taprbm
