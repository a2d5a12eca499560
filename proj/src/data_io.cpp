#include "taprbm/data_io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "taprbm/errors.hpp"

namespace taprbm {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("IDX file truncated: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8),
                               std::uint8_t(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxTensor read_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open IDX file: " + path);

    const std::uint32_t magic = read_be32(in, path);
    if ((magic >> 16) != 0) throw FormatError("bad IDX magic in " + path);
    const std::uint8_t dtype = (magic >> 8) & 0xff;
    const std::uint8_t ndim = magic & 0xff;
    if (dtype != 0x08) {
        throw FormatError("unsupported IDX element type 0x" + std::to_string(dtype) + " in " + path);
    }
    if (ndim < 1 || ndim > 3) throw FormatError("unsupported IDX rank in " + path);

    IdxTensor t;
    std::size_t total = 1;
    for (int d = 0; d < ndim; ++d) {
        const std::uint32_t s = read_be32(in, path);
        if (s == 0) throw FormatError("zero IDX dimension in " + path);
        t.dims.push_back(s);
        total *= s;
    }
    t.data.resize(total);
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(in.gcount()) != total) {
        throw FormatError("IDX payload shorter than declared in " + path);
    }
    return t;
}

void write_idx(const IdxTensor& t, const std::string& path) {
    if (t.dims.empty() || t.dims.size() > 3) throw InputError("write_idx: bad rank");
    std::size_t total = 1;
    for (auto d : t.dims) total *= d;
    if (total != t.data.size()) throw InputError("write_idx: dims do not match payload");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_be32(out, 0x00000800u | static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) write_be32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size()));
    if (!out) throw IoError("short write: " + path);
}

Dataset preprocess(const IdxTensor& raw, Preprocess mode) {
    const Eigen::Index n = static_cast<Eigen::Index>(raw.dims[0]);
    std::size_t feat = 1;
    for (std::size_t d = 1; d < raw.dims.size(); ++d) feat *= raw.dims[d];
    Dataset out;
    out.rows.resize(n, static_cast<Eigen::Index>(feat));
    for (Eigen::Index r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < feat; ++c) {
            const double v = raw.data[static_cast<std::size_t>(r) * feat + c] / 255.0;
            out.rows(r, static_cast<Eigen::Index>(c)) =
                (mode == Preprocess::Binarize) ? (v > 0.5 ? 1.0 : 0.0) : v;
        }
    }
    return out;
}

Matrix binarize(const Matrix& values) {
    return (values.array() > 0.5).cast<double>();
}

Dataset read_delimited(const std::string& path, bool has_header, bool rescale) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && has_header) {
            first = false;
            continue;
        }
        first = false;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("inconsistent row length in " + path);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("no data rows in " + path);

    Dataset out;
    out.rows.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index r = 0; r < out.rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.rows.cols(); ++c) {
            out.rows(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    if (rescale) {
        const double mx = out.rows.maxCoeff();
        if (mx > 1.0) out.rows /= mx;
    }
    out.source = path;
    return out;
}

std::vector<std::vector<Eigen::Index>> minibatches(Eigen::Index n_rows, Eigen::Index m,
                                                   std::uint64_t seed, std::uint64_t epoch) {
    if (m < 1) throw InputError("minibatches: batch size must be >= 1");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 gen(seed ^ epoch);
    std::shuffle(order.begin(), order.end(), gen);

    std::vector<std::vector<Eigen::Index>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(m)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(m));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace taprbm
